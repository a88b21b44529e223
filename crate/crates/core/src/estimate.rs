//! Edge-corrected estimators of the intensity and the F, G and K functions, and
//! parallel replicate runs that aggregate them with standard errors.
//!
//! Border correction uses a single reference region for the whole grid: the inner
//! window intersected with the pattern window eroded by the largest `t`. Every grid
//! value is then computed from the same reference points, which keeps the cdf
//! estimates monotone in `t`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::check_grid;
use crate::error::{Error, Result};
use crate::grid::GridIndex;
use crate::model::{PairwiseModel, PointPattern, Window};
use crate::rng::RngSeed;
use crate::simulate::{Boundary, Sampler};

/// Probes per axis for the empty-space estimator, before the overall cap.
pub const PROBES_PER_AXIS: usize = 100;
/// Overall cap on empty-space probes.
pub const MAX_PROBES: usize = 1_000_000;

/// How estimators deal with the window boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeCorrection {
    /// Minus sampling: reference points are kept at least `t_max` from the pattern
    /// window's boundary.
    #[default]
    Border,
    /// The pattern window is a torus and distances use the minimum image.
    Toroidal,
}

/// Reference region and neighbour index shared by the estimators.
struct Frame<'a> {
    pattern: &'a PointPattern,
    region: Window,
    grid: GridIndex,
    reach: f64,
}

impl<'a> Frame<'a> {
    fn new(pattern: &'a PointPattern, inner: &Window, t_max: f64, edge: EdgeCorrection) -> Result<Self> {
        let window = pattern.window();
        if inner.dim() != window.dim() {
            return Err(Error::Domain("inner window dimension differs from the pattern's".into()));
        }
        if !window.contains_window(inner) {
            return Err(Error::Domain("inner window must lie inside the pattern window".into()));
        }
        let periodic = edge == EdgeCorrection::Toroidal;
        let region = if periodic {
            if (0..window.dim()).any(|a| 2.0 * t_max > window.side(a)) {
                return Err(Error::Domain(format!(
                    "t = {t_max} exceeds half the torus side"
                )));
            }
            inner.clone()
        } else {
            window
                .erode(t_max)
                .and_then(|e| e.intersect(inner))
                .ok_or_else(|| {
                    Error::Domain(format!(
                        "no reference region left: the inner window is within {t_max} of the pattern boundary"
                    ))
                })?
        };
        let mut grid = GridIndex::new(window, t_max, periodic);
        for (i, p) in pattern.points().enumerate() {
            grid.insert(i as u32, p);
        }
        Ok(Frame {
            pattern,
            region,
            grid,
            reach: t_max,
        })
    }

    /// Distance from `x` to the nearest pattern point other than `skip`, or infinity
    /// when none lies within reach.
    fn nearest(&self, x: &[f64], skip: Option<u32>) -> f64 {
        let mut best = f64::INFINITY;
        self.grid
            .for_each_within(x, self.reach, self.pattern.coords(), |id, d2| {
                if Some(id) != skip && d2 < best {
                    best = d2;
                }
            });
        best.sqrt()
    }

    fn reference_ids(&self) -> impl Iterator<Item = (usize, &[f64])> + '_ {
        self.pattern
            .points()
            .enumerate()
            .filter(|(_, p)| self.region.contains(p))
    }
}

fn t_max(t_grid: &[f64]) -> Result<f64> {
    check_grid(t_grid)?;
    t_grid
        .last()
        .copied()
        .ok_or_else(|| Error::Domain("empty t grid".into()))
}

/// Number of sorted `values` at most `t`, for each `t` in the grid.
fn cumulative_counts(values: &mut [f64], t_grid: &[f64]) -> Vec<u64> {
    values.sort_unstable_by(f64::total_cmp);
    t_grid
        .iter()
        .map(|&t| values.partition_point(|&v| v <= t) as u64)
        .collect()
}

fn probes_per_axis(d: usize) -> usize {
    let mut m = PROBES_PER_AXIS;
    while m > 1 && (m as f64).powi(d as i32) > MAX_PROBES as f64 {
        m -= 1;
    }
    m
}

/// Points in `inner` divided by its volume.
pub fn est_intensity(pattern: &PointPattern, inner: &Window) -> Result<f64> {
    let vol = inner.volume();
    if !(vol > 0.0) {
        return Err(Error::Domain("inner window has zero volume".into()));
    }
    Ok(pattern.count_in(inner) as f64 / vol)
}

/// Empty-space function, border corrected. See [`est_f_with`].
pub fn est_f(pattern: &PointPattern, inner: &Window, t_grid: &[f64]) -> Result<Vec<f64>> {
    est_f_with(pattern, inner, t_grid, EdgeCorrection::Border)
}

/// Fraction of a regular `m^d` probe lattice over the reference region whose nearest
/// pattern point lies within `t`.
pub fn est_f_with(
    pattern: &PointPattern,
    inner: &Window,
    t_grid: &[f64],
    edge: EdgeCorrection,
) -> Result<Vec<f64>> {
    let t_max = t_max(t_grid)?;
    let frame = Frame::new(pattern, inner, t_max, edge)?;
    let d = pattern.dim();
    let m = probes_per_axis(d);
    let total = m.pow(d as u32);
    let mut dists = Vec::with_capacity(total);
    let mut probe = vec![0.0; d];
    for k in 0..total {
        let mut rest = k;
        for (a, x) in probe.iter_mut().enumerate() {
            let i = rest % m;
            rest /= m;
            *x = frame.region.lower()[a] + (i as f64 + 0.5) * frame.region.side(a) / m as f64;
        }
        dists.push(frame.nearest(&probe, None));
    }
    Ok(cumulative_counts(&mut dists, t_grid)
        .into_iter()
        .map(|c| c as f64 / total as f64)
        .collect())
}

/// Numerator and denominator of the nearest-neighbour cdf estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct NearestNeighbourCounts {
    /// Reference points whose nearest neighbour lies within each `t`.
    pub within: Vec<u64>,
    /// Reference points.
    pub points: u64,
}

pub fn nearest_neighbour_counts(
    pattern: &PointPattern,
    inner: &Window,
    t_grid: &[f64],
    edge: EdgeCorrection,
) -> Result<NearestNeighbourCounts> {
    let t_max = t_max(t_grid)?;
    let frame = Frame::new(pattern, inner, t_max, edge)?;
    let mut dists: Vec<f64> = frame
        .reference_ids()
        .map(|(i, x)| frame.nearest(x, Some(i as u32)))
        .collect();
    let points = dists.len() as u64;
    Ok(NearestNeighbourCounts {
        within: cumulative_counts(&mut dists, t_grid),
        points,
    })
}

/// Nearest-neighbour distance cdf, border corrected. See [`est_g_with`].
pub fn est_g(pattern: &PointPattern, inner: &Window, t_grid: &[f64]) -> Result<Vec<Option<f64>>> {
    est_g_with(pattern, inner, t_grid, EdgeCorrection::Border)
}

/// Empirical cdf of nearest-neighbour distances from the points in the reference
/// region. Every entry is `None` when the region holds no point.
pub fn est_g_with(
    pattern: &PointPattern,
    inner: &Window,
    t_grid: &[f64],
    edge: EdgeCorrection,
) -> Result<Vec<Option<f64>>> {
    let c = nearest_neighbour_counts(pattern, inner, t_grid, edge)?;
    Ok(c.within
        .iter()
        .map(|&w| (c.points > 0).then(|| w as f64 / c.points as f64))
        .collect())
}

/// Ordered pair counts behind the K estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct PairCounts {
    /// Ordered pairs `(x, y)`, `x` in the reference region, with `|x - y| <= t`.
    pub pairs: Vec<u64>,
    /// Points in the reference region.
    pub points: u64,
    /// Volume of the reference region.
    pub region_volume: f64,
}

pub fn pair_counts(
    pattern: &PointPattern,
    inner: &Window,
    t_grid: &[f64],
    edge: EdgeCorrection,
) -> Result<PairCounts> {
    let t_max = t_max(t_grid)?;
    let frame = Frame::new(pattern, inner, t_max, edge)?;
    let mut dists = Vec::new();
    let mut points = 0u64;
    let coords = pattern.coords();
    for (i, x) in frame.reference_ids() {
        points += 1;
        frame.grid.for_each_within(x, t_max, coords, |id, d2| {
            if id as usize != i {
                dists.push(d2.sqrt());
            }
        });
    }
    Ok(PairCounts {
        pairs: cumulative_counts(&mut dists, t_grid),
        points,
        region_volume: frame.region.volume(),
    })
}

/// Pair-count K estimate, border corrected. See [`est_k_with`].
pub fn est_k(pattern: &PointPattern, inner: &Window, t_grid: &[f64], lambda_hat: f64) -> Result<Vec<f64>> {
    est_k_with(pattern, inner, t_grid, lambda_hat, EdgeCorrection::Border)
}

/// `K(t) = #{ordered pairs within t, first point in the reference region} /
/// (lambda_hat^2 |region|)`.
pub fn est_k_with(
    pattern: &PointPattern,
    inner: &Window,
    t_grid: &[f64],
    lambda_hat: f64,
    edge: EdgeCorrection,
) -> Result<Vec<f64>> {
    if !(lambda_hat.is_finite() && lambda_hat > 0.0) {
        return Err(Error::Domain(format!("lambda_hat must be positive, got {lambda_hat}")));
    }
    let c = pair_counts(pattern, inner, t_grid, edge)?;
    let scale = lambda_hat * lambda_hat * c.region_volume;
    Ok(c.pairs.iter().map(|&p| p as f64 / scale).collect())
}

/// Intensity of the points in the K reference region, the natural plug-in for
/// [`est_k`] on a single pattern.
pub fn reference_intensity(
    pattern: &PointPattern,
    inner: &Window,
    t_grid: &[f64],
    edge: EdgeCorrection,
) -> Result<f64> {
    let c = pair_counts(pattern, inner, t_grid, edge)?;
    Ok(c.points as f64 / c.region_volume)
}

/// Summary statistic computed on every replicate.
#[derive(Debug, Clone, PartialEq)]
pub enum Statistic {
    Intensity,
    F(Vec<f64>),
    G(Vec<f64>),
    K(Vec<f64>),
}

impl Statistic {
    fn t_max(&self) -> f64 {
        match self {
            Statistic::Intensity => 0.0,
            Statistic::F(t) | Statistic::G(t) | Statistic::K(t) => t.last().copied().unwrap_or(0.0),
        }
    }
}

/// Mean and standard error of a scalar statistic over replicates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicateSummary {
    pub values: Vec<f64>,
    pub mean: f64,
    /// Sample standard deviation over `sqrt(n)`; `None` for a single replicate.
    pub std_err: Option<f64>,
    pub n_replicates: usize,
}

impl ReplicateSummary {
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        let n = values.len();
        if n == 0 {
            return Err(Error::Domain("no replicate values".into()));
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let std_err = sample_sd(&values, mean).map(|s| s / (n as f64).sqrt());
        Ok(Self {
            values,
            mean,
            std_err,
            n_replicates: n,
        })
    }
}

fn sample_sd(values: &[f64], mean: f64) -> Option<f64> {
    let n = values.len();
    (n >= 2).then(|| {
        let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
        (ss / (n - 1) as f64).sqrt()
    })
}

/// Replicate estimate of a summary function on a grid. `NaN` marks undefined entries.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveSummary {
    pub abscissae: Vec<f64>,
    pub estimate: Vec<f64>,
    pub std_err: Vec<f64>,
    pub n_replicates: usize,
}

/// Result of [`run_replicates`].
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Summary {
    Scalar(ReplicateSummary),
    Curve(CurveSummary),
}

impl Summary {
    pub fn scalar(&self) -> Option<&ReplicateSummary> {
        match self {
            Summary::Scalar(s) => Some(s),
            Summary::Curve(_) => None,
        }
    }

    pub fn curve(&self) -> Option<&CurveSummary> {
        match self {
            Summary::Curve(c) => Some(c),
            Summary::Scalar(_) => None,
        }
    }
}

/// Options for [`run_replicates_with`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ReplicateOptions {
    pub edge: EdgeCorrection,
    /// Width of the simulation buffer around the inner window under border
    /// correction. Defaults to the larger of the interaction range and `t_max`.
    pub buffer: Option<f64>,
}

/// Simulation window and boundary used for replicates on `inner`.
pub fn simulation_window(
    model: &PairwiseModel,
    inner: &Window,
    statistic: &Statistic,
    opts: ReplicateOptions,
) -> (Window, Boundary) {
    match opts.edge {
        EdgeCorrection::Toroidal => (inner.clone(), Boundary::Periodic),
        EdgeCorrection::Border => {
            let buffer = opts
                .buffer
                .unwrap_or_else(|| model.range().max(statistic.t_max()));
            (inner.dilate(buffer), Boundary::Free)
        }
    }
}

/// Per-replicate raw output before aggregation.
enum Raw {
    Scalar(f64),
    Curve(Vec<f64>),
    Nn(NearestNeighbourCounts),
    Pairs(PairCounts),
}

fn evaluate(
    pattern: &PointPattern,
    inner: &Window,
    statistic: &Statistic,
    edge: EdgeCorrection,
) -> Result<Raw> {
    Ok(match statistic {
        Statistic::Intensity => Raw::Scalar(est_intensity(pattern, inner)?),
        Statistic::F(t) => Raw::Curve(est_f_with(pattern, inner, t, edge)?),
        Statistic::G(t) => Raw::Nn(nearest_neighbour_counts(pattern, inner, t, edge)?),
        Statistic::K(t) => Raw::Pairs(pair_counts(pattern, inner, t, edge)?),
    })
}

/// Summary of a single pattern, identical to a one-replicate run that drew it.
pub fn summarize_pattern(
    pattern: &PointPattern,
    inner: &Window,
    statistic: &Statistic,
    edge: EdgeCorrection,
) -> Result<Summary> {
    aggregate(statistic, vec![evaluate(pattern, inner, statistic, edge)?])
}

/// Runs `n` independent draws (replicate `i` uses `seed.child(i)`) with border
/// correction and a buffered simulation window. See [`run_replicates_with`].
pub fn run_replicates(
    model: &PairwiseModel,
    inner: &Window,
    sampler: Sampler,
    n: usize,
    statistic: &Statistic,
    seed: RngSeed,
) -> Result<Summary> {
    run_replicates_with(model, inner, sampler, n, statistic, seed, ReplicateOptions::default())
}

/// Simulates `n` patterns in parallel, evaluates `statistic` on each and aggregates.
///
/// Intensity and F are averaged over replicates. G and K are ratio estimates pooled
/// over replicates (total numerator over total denominator) with delta-method
/// standard errors, which avoids the small-sample bias of averaging per-pattern ratios.
/// Results do not depend on the number of worker threads.
pub fn run_replicates_with(
    model: &PairwiseModel,
    inner: &Window,
    sampler: Sampler,
    n: usize,
    statistic: &Statistic,
    seed: RngSeed,
    opts: ReplicateOptions,
) -> Result<Summary> {
    if n == 0 {
        return Err(Error::Domain("at least one replicate is required".into()));
    }
    if let Statistic::F(t) | Statistic::G(t) | Statistic::K(t) = statistic {
        check_grid(t)?;
        if t.is_empty() {
            return Err(Error::Domain("empty t grid".into()));
        }
    }
    let (window, boundary) = simulation_window(model, inner, statistic, opts);
    let raws: Vec<Result<Raw>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let pattern = sampler.sample(model, &window, seed.child(i as u64), boundary)?;
            evaluate(&pattern, inner, statistic, opts.edge)
        })
        .collect();
    let mut ok = Vec::with_capacity(n);
    for (index, r) in raws.into_iter().enumerate() {
        ok.push(r.map_err(|e| Error::Replicate {
            index,
            source: Box::new(e),
        })?);
    }
    aggregate(statistic, ok)
}

fn aggregate(statistic: &Statistic, raws: Vec<Raw>) -> Result<Summary> {
    let n = raws.len();
    let nf = n as f64;
    match statistic {
        Statistic::Intensity => {
            let values = raws
                .into_iter()
                .map(|r| match r {
                    Raw::Scalar(v) => v,
                    _ => unreachable!("intensity yields scalars"),
                })
                .collect();
            Ok(Summary::Scalar(ReplicateSummary::from_values(values)?))
        }
        Statistic::F(t) => {
            let curves: Vec<Vec<f64>> = raws
                .into_iter()
                .map(|r| match r {
                    Raw::Curve(c) => c,
                    _ => unreachable!("F yields curves"),
                })
                .collect();
            let mut estimate = Vec::with_capacity(t.len());
            let mut std_err = Vec::with_capacity(t.len());
            for k in 0..t.len() {
                let col: Vec<f64> = curves.iter().map(|c| c[k]).collect();
                let mean = col.iter().sum::<f64>() / nf;
                estimate.push(mean);
                std_err.push(sample_sd(&col, mean).map_or(f64::NAN, |s| s / nf.sqrt()));
            }
            Ok(Summary::Curve(CurveSummary {
                abscissae: t.clone(),
                estimate,
                std_err,
                n_replicates: n,
            }))
        }
        Statistic::G(t) => {
            let counts: Vec<NearestNeighbourCounts> = raws
                .into_iter()
                .map(|r| match r {
                    Raw::Nn(c) => c,
                    _ => unreachable!("G yields neighbour counts"),
                })
                .collect();
            let denom: Vec<f64> = counts.iter().map(|c| c.points as f64).collect();
            let mut estimate = Vec::with_capacity(t.len());
            let mut std_err = Vec::with_capacity(t.len());
            for k in 0..t.len() {
                let numer: Vec<f64> = counts.iter().map(|c| c.within[k] as f64).collect();
                let (e, s) = ratio_of_means(&numer, &denom);
                estimate.push(e);
                std_err.push(s);
            }
            Ok(Summary::Curve(CurveSummary {
                abscissae: t.clone(),
                estimate,
                std_err,
                n_replicates: n,
            }))
        }
        Statistic::K(t) => {
            let counts: Vec<PairCounts> = raws
                .into_iter()
                .map(|r| match r {
                    Raw::Pairs(c) => c,
                    _ => unreachable!("K yields pair counts"),
                })
                .collect();
            let lambdas: Vec<f64> = counts
                .iter()
                .map(|c| c.points as f64 / c.region_volume)
                .collect();
            let lambda_bar = lambdas.iter().sum::<f64>() / nf;
            let mut estimate = Vec::with_capacity(t.len());
            let mut std_err = Vec::with_capacity(t.len());
            for k in 0..t.len() {
                let dens: Vec<f64> = counts
                    .iter()
                    .map(|c| c.pairs[k] as f64 / c.region_volume)
                    .collect();
                let dens_bar = dens.iter().sum::<f64>() / nf;
                if lambda_bar <= 0.0 {
                    estimate.push(f64::NAN);
                    std_err.push(f64::NAN);
                    continue;
                }
                let kk = dens_bar / (lambda_bar * lambda_bar);
                // linearisation of dens_bar / lambda_bar^2 around the means
                let resid: Vec<f64> = dens
                    .iter()
                    .zip(&lambdas)
                    .map(|(a, l)| {
                        (a - dens_bar) / (lambda_bar * lambda_bar) - 2.0 * kk * (l - lambda_bar) / lambda_bar
                    })
                    .collect();
                estimate.push(kk);
                std_err.push(sample_sd(&resid, 0.0).map_or(f64::NAN, |s| s / nf.sqrt()));
            }
            Ok(Summary::Curve(CurveSummary {
                abscissae: t.clone(),
                estimate,
                std_err,
                n_replicates: n,
            }))
        }
    }
}

/// `sum(numer) / sum(denom)` with its delta-method standard error.
fn ratio_of_means(numer: &[f64], denom: &[f64]) -> (f64, f64) {
    let nf = numer.len() as f64;
    let d_bar = denom.iter().sum::<f64>() / nf;
    if d_bar <= 0.0 {
        return (f64::NAN, f64::NAN);
    }
    let r = numer.iter().sum::<f64>() / denom.iter().sum::<f64>();
    let resid: Vec<f64> = numer
        .iter()
        .zip(denom)
        .map(|(a, b)| (a - r * b) / d_bar)
        .collect();
    let se = sample_sd(&resid, 0.0).map_or(f64::NAN, |s| s / nf.sqrt());
    (r, se)
}

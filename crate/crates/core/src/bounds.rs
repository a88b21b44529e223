//! Analytic bounds on the probability generating functional and everything derived from
//! it: intensity, the F/G/K summary functions, the pair correlation function and higher
//! correlation functions.
//!
//! The true intensity is unknown, so every statistic that depends on it takes an
//! [`Interval`] for it and returns an enclosure valid for every value in that interval.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    ball_volume, g_tilde_t, g_tilde_x, integral_g, integral_gamma, PairwiseModel,
};
use crate::quadrature::GaussLegendre;
use crate::specfun::lambert_w0;

/// Closed interval `[lower, upper]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lower: f64,
    pub upper: f64,
}

impl Interval {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if lower.is_nan() || upper.is_nan() || lower > upper {
            return Err(Error::Domain(format!("interval needs lower <= upper, got [{lower}, {upper}]")));
        }
        Ok(Self { lower, upper })
    }

    pub fn point(v: f64) -> Self {
        Self { lower: v, upper: v }
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.lower && v <= self.upper
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    fn scale(self, k: f64) -> Self {
        Self {
            lower: self.lower * k,
            upper: self.upper * k,
        }
    }
}

/// Per-abscissa bands for a summary function, optionally with a Monte Carlo estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveBand {
    pub abscissae: Vec<f64>,
    pub bands: Vec<Interval>,
    pub estimate: Option<Vec<f64>>,
    pub std_err: Option<Vec<f64>>,
}

impl CurveBand {
    pub fn new(abscissae: Vec<f64>, bands: Vec<Interval>) -> Result<Self> {
        if abscissae.len() != bands.len() {
            return Err(Error::Domain("abscissae and bands differ in length".into()));
        }
        Ok(Self {
            abscissae,
            bands,
            estimate: None,
            std_err: None,
        })
    }

    /// Attaches an estimate with standard errors (`NaN` marks an undefined entry).
    pub fn with_estimate(mut self, estimate: Vec<f64>, std_err: Vec<f64>) -> Result<Self> {
        if estimate.len() != self.abscissae.len() || std_err.len() != self.abscissae.len() {
            return Err(Error::Domain("estimate length does not match the grid".into()));
        }
        self.estimate = Some(estimate);
        self.std_err = Some(std_err);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.abscissae.len()
    }

    pub fn is_empty(&self) -> bool {
        self.abscissae.is_empty()
    }

    pub fn lower(&self) -> Vec<f64> {
        self.bands.iter().map(|b| b.lower).collect()
    }

    pub fn upper(&self) -> Vec<f64> {
        self.bands.iter().map(|b| b.upper).collect()
    }
}

pub(crate) fn check_grid(grid: &[f64]) -> Result<()> {
    if let Some(&t) = grid.iter().find(|t| !(t.is_finite() && **t >= 0.0)) {
        return Err(Error::Domain(format!("grid values must be finite and nonnegative, got {t}")));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Domain("grid must be strictly increasing".into()));
    }
    Ok(())
}

fn check_lambda(lambda: Interval, ceiling: f64) -> Result<()> {
    if lambda.lower < 0.0 {
        return Err(Error::Domain(format!("intensity must be nonnegative, got {}", lambda.lower)));
    }
    if lambda.upper > ceiling * (1.0 + 1e-12) {
        return Err(Error::Consistency(format!(
            "intensity {} exceeds the local stability constant {ceiling}",
            lambda.upper
        )));
    }
    Ok(())
}

/// `1 - exp(-x)` without cancellation.
fn one_minus_exp_neg(x: f64) -> f64 {
    -(-x).exp_m1()
}

/// Bounds on `E prod g(y)` for a stationary process with intensity in `lambda`, local
/// stability constant `c_star` and `G = int 1 - g`:
/// `1 - lambda G <= E prod g <= 1 - (lambda / c*)(1 - exp(-c* G))`.
pub fn pgfl_bounds(lambda: Interval, c_star: f64, g: f64) -> Result<Interval> {
    if !(c_star > 0.0) {
        return Err(Error::Domain(format!("c* must be positive, got {c_star}")));
    }
    if !(g >= 0.0) {
        return Err(Error::Domain(format!("G must be nonnegative, got {g}")));
    }
    check_lambda(lambda, c_star)?;
    // Both bounds decrease in lambda.
    let lower = (1.0 - lambda.upper * g).clamp(0.0, 1.0);
    let upper = (1.0 - lambda.lower / c_star * one_minus_exp_neg(c_star * g)).clamp(0.0, 1.0);
    Interval::new(lower, upper)
}

/// `beta / (1 + beta G) <= lambda <= beta / (2 - exp(-beta G))` for an inhibitory pairwise
/// interaction process with `G = int 1 - phi`.
pub fn intensity_bounds(beta: f64, g: f64) -> Interval {
    let x = beta * g;
    Interval {
        lower: beta / (1.0 + x),
        upper: beta / (1.0 + one_minus_exp_neg(x)),
    }
}

const SMALL_G: f64 = 1e-12;

/// Poisson-saddlepoint approximation `W(beta G) / G`.
pub fn lambda_ps(beta: f64, g: f64) -> f64 {
    if g < SMALL_G {
        return beta;
    }
    lambert_w0(beta * g).expect("beta G is nonnegative") / g
}

/// Mean-field approximation `W(beta Gamma) / Gamma`, zero for infinite `Gamma`.
pub fn lambda_mf(beta: f64, gamma: f64) -> f64 {
    if gamma.is_infinite() {
        return 0.0;
    }
    if gamma < SMALL_G {
        return beta;
    }
    lambert_w0(beta * gamma).expect("beta Gamma is nonnegative") / gamma
}

/// Where the saddlepoint approximation sits relative to the intensity bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PsBracket {
    pub lower: f64,
    pub lambda_ps: f64,
    pub upper: f64,
    pub holds: bool,
}

/// Checks `beta/(1+beta G) <= lambda_PS <= beta/(2-exp(-beta G))`.
pub fn lambda_ps_bounds_check(beta: f64, g: f64) -> PsBracket {
    let b = intensity_bounds(beta, g);
    let ps = lambda_ps(beta, g);
    // The three quantities are computed along different floating point paths; allow for
    // rounding where they coincide (G -> 0 or large beta G on the lower side).
    let slack = 4.0 * f64::EPSILON * beta;
    PsBracket {
        lower: b.lower,
        lambda_ps: ps,
        upper: b.upper,
        holds: b.lower <= ps + slack && ps <= b.upper + slack,
    }
}

/// Intensity bounds with both classical approximations, for one model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntensitySummary {
    pub lower: f64,
    pub lambda_ps: f64,
    pub lambda_mf: f64,
    pub upper: f64,
}

pub fn intensity_summary(model: &PairwiseModel) -> IntensitySummary {
    let g = integral_g(model);
    let b = intensity_bounds(model.beta(), g);
    IntensitySummary {
        lower: b.lower,
        lambda_ps: lambda_ps(model.beta(), g),
        lambda_mf: lambda_mf(model.beta(), integral_gamma(model)),
        upper: b.upper,
    }
}

/// Empty-space function bounds
/// `(lambda/c*)(1 - exp(-c* alpha_d t^d)) <= F(t) <= lambda alpha_d t^d`, capped at 1.
pub fn f_bounds(lambda: Interval, c_star: f64, d: usize, t_grid: &[f64]) -> Result<CurveBand> {
    check_grid(t_grid)?;
    check_lambda(lambda, c_star)?;
    let a = ball_volume(d);
    let bands = t_grid
        .iter()
        .map(|&t| {
            let vol = a * t.powi(d as i32);
            let lower = (lambda.lower / c_star * one_minus_exp_neg(c_star * vol)).min(1.0);
            let upper = (lambda.upper * vol).min(1.0);
            Interval { lower, upper }
        })
        .collect();
    CurveBand::new(t_grid.to_vec(), bands)
}

fn check_model_lambda(model: &PairwiseModel, lambda: Interval) -> Result<()> {
    if !(lambda.lower > 0.0) {
        return Err(Error::Domain(format!(
            "intensity interval must be strictly positive, got lower = {}",
            lambda.lower
        )));
    }
    check_lambda(lambda, model.beta())
}

/// Nearest-neighbour function bounds
/// `2 - beta/lambda - exp(-beta Gt) <= G(t) <= 1 - beta/lambda + beta Gt`, clamped to `[0, 1]`.
pub fn g_bounds(model: &PairwiseModel, lambda: Interval, t_grid: &[f64]) -> Result<CurveBand> {
    check_grid(t_grid)?;
    check_model_lambda(model, lambda)?;
    let beta = model.beta();
    let bands = t_grid
        .iter()
        .map(|&t| {
            let gt = g_tilde_t(model, t);
            // Both expressions increase in lambda.
            let lower = 1.0 - beta / lambda.lower + one_minus_exp_neg(beta * gt);
            let upper = 1.0 - beta / lambda.upper + beta * gt;
            Interval {
                lower: lower.clamp(0.0, 1.0),
                upper: upper.clamp(0.0, 1.0),
            }
        })
        .collect();
    CurveBand::new(t_grid.to_vec(), bands)
}

/// Default number of intensity values scanned by [`pcf_bounds`].
pub const PCF_LAMBDA_GRID: usize = 16;

/// Pair correlation bounds at distance `s`, enclosing both expressions over the whole
/// intensity interval.
///
/// With `u = 1/lambda` the lower expression `phi (beta^2 u^2 - beta^2 Gx u)` and the upper
/// expression `phi (beta^2 u^2 - beta u (1 - exp(-beta Gx)))` are convex quadratics in `u`.
/// The scan covers a regular `lambda` grid including both endpoints, to which the vertex of
/// the lower parabola is added when it falls inside the interval.
pub fn pcf_band_at(model: &PairwiseModel, lambda: Interval, s: f64, n_grid: usize) -> Interval {
    let phi = model.interaction().phi(s);
    if phi == 0.0 {
        return Interval::point(0.0);
    }
    let beta = model.beta();
    let gx = g_tilde_x(model, s);
    let decay = one_minus_exp_neg(beta * gx);
    let lower_at = |lam: f64| phi * (beta * beta / (lam * lam) - beta * beta * gx / lam);
    let upper_at = |lam: f64| phi * (beta * beta / (lam * lam) - beta / lam * decay);

    let n = n_grid.max(2);
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let lam = if i + 1 == n {
            lambda.upper
        } else {
            lambda.lower + (lambda.upper - lambda.lower) * i as f64 / (n - 1) as f64
        };
        lo = lo.min(lower_at(lam));
        hi = hi.max(upper_at(lam));
    }
    if gx > 0.0 {
        let vertex = 2.0 / gx;
        if lambda.contains(vertex) {
            lo = lo.min(lower_at(vertex));
        }
    }
    Interval {
        lower: lo.max(0.0),
        upper: hi.max(lo.max(0.0)),
    }
}

/// Pair correlation bounds on a grid of distances.
pub fn pcf_bounds(model: &PairwiseModel, lambda: Interval, s_grid: &[f64]) -> Result<CurveBand> {
    pcf_bounds_with_grid(model, lambda, s_grid, PCF_LAMBDA_GRID)
}

/// [`pcf_bounds`] with an explicit number of scanned intensity values.
pub fn pcf_bounds_with_grid(
    model: &PairwiseModel,
    lambda: Interval,
    s_grid: &[f64],
    n_grid: usize,
) -> Result<CurveBand> {
    check_grid(s_grid)?;
    check_model_lambda(model, lambda)?;
    let bands = s_grid
        .iter()
        .map(|&s| pcf_band_at(model, lambda, s, n_grid))
        .collect();
    CurveBand::new(s_grid.to_vec(), bands)
}

const K_NODES: usize = 64;

fn k_rule() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(K_NODES))
}

/// Radii where the pair correlation bounds may jump or kink.
fn pcf_breaks(model: &PairwiseModel) -> Vec<f64> {
    let b = model.interaction().breakpoints();
    let mut out = b.to_vec();
    for &x in b {
        for &y in b {
            out.push(x + y);
            out.push((x - y).abs());
        }
    }
    out.retain(|&v| v > 0.0);
    out.sort_by(f64::total_cmp);
    out.dedup();
    out
}

/// Ripley K bounds `alpha_d d int_0^t s^(d-1) rho(s) ds` from the pair correlation band.
///
/// Integrates cumulatively along the grid with composite Gauss-Legendre panels split at
/// the interaction breakpoints, so each band is nondecreasing in `t`.
pub fn k_bounds(model: &PairwiseModel, lambda: Interval, t_grid: &[f64]) -> Result<CurveBand> {
    check_grid(t_grid)?;
    check_model_lambda(model, lambda)?;
    let d = model.dim();
    let scale = ball_volume(d) * d as f64;
    let breaks = pcf_breaks(model);
    let rule = k_rule();
    let mut acc_lo = 0.0;
    let mut acc_hi = 0.0;
    let mut prev = 0.0;
    let mut bands = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let (lo_part, hi_part) = rule.integrate_split_pair(prev, t, &breaks, |s| {
            let band = pcf_band_at(model, lambda, s, PCF_LAMBDA_GRID);
            let w = scale * s.powi(d as i32 - 1);
            (w * band.lower, w * band.upper)
        });
        acc_lo += lo_part;
        acc_hi += hi_part;
        prev = t;
        bands.push(Interval {
            lower: acc_lo,
            upper: acc_hi.max(acc_lo),
        });
    }
    CurveBand::new(t_grid.to_vec(), bands)
}

/// `int 1 - prod_i phi(y - x_i) dy` over the union of the interaction balls.
///
/// Tensor grid with spacing about `s_k / 200` over the bounding box of the balls. Along the
/// last coordinate the integrand is piecewise constant with breakpoints known in closed
/// form, so each grid line is integrated exactly. The first coordinate is split into
/// panels wherever a sphere slice appears or two circles cross (in the plane) and uses
/// Gauss-Legendre nodes at that spacing; any axes in between use the midpoint rule.
pub fn union_interaction_integral(model: &PairwiseModel, points: &[Vec<f64>]) -> f64 {
    let d = model.dim();
    let inter = model.interaction();
    let reach = inter.range();
    if points.is_empty() || inter.is_trivial() {
        return 0.0;
    }
    let mut line = vec![0.0; d];
    let mut cuts = Vec::new();
    if d == 1 {
        return line_integral(inter, points, &mut line, &mut cuts);
    }
    let h = reach / 200.0;
    let lo: Vec<f64> = (0..d)
        .map(|a| points.iter().map(|p| p[a]).fold(f64::INFINITY, f64::min) - reach)
        .collect();
    let hi: Vec<f64> = (0..d)
        .map(|a| points.iter().map(|p| p[a]).fold(f64::NEG_INFINITY, f64::max) + reach)
        .collect();

    let mut outer_breaks = Vec::new();
    for p in points {
        for &b in inter.breakpoints() {
            outer_breaks.push(p[0] - b);
            outer_breaks.push(p[0] + b);
        }
    }
    if d == 2 {
        for (i, p) in points.iter().enumerate() {
            for q in &points[i + 1..] {
                for &a in inter.breakpoints() {
                    for &b in inter.breakpoints() {
                        outer_breaks.extend(circle_crossings_x(p, a, q, b));
                    }
                }
            }
        }
    }
    outer_breaks.push(lo[0]);
    outer_breaks.push(hi[0]);
    outer_breaks.sort_by(f64::total_cmp);
    outer_breaks.dedup();

    // midpoint rows over axes 1..d-1 (empty when d == 2)
    let mid_axes = d - 2;
    let counts: Vec<usize> = (1..d - 1)
        .map(|a| ((hi[a] - lo[a]) / h).ceil() as usize)
        .collect();
    let mid_cell: f64 = (1..d - 1)
        .map(|a| (hi[a] - lo[a]) / counts[a - 1] as f64)
        .product();

    let mut total = 0.0;
    for w in outer_breaks.windows(2) {
        let len = w[1] - w[0];
        if len <= 0.0 {
            continue;
        }
        let n = ((len / h).ceil() as usize).clamp(4, 512);
        let rule = GaussLegendre::new(n);
        total += rule.integrate(w[0], w[1], |x0| {
            line[0] = x0;
            let mut idx = vec![0usize; mid_axes];
            let mut acc = 0.0;
            loop {
                for (k, &i) in idx.iter().enumerate() {
                    let a = k + 1;
                    let step = (hi[a] - lo[a]) / counts[k] as f64;
                    line[a] = lo[a] + (i as f64 + 0.5) * step;
                }
                acc += line_integral(inter, points, &mut line, &mut cuts);
                let mut k = 0;
                loop {
                    if k == mid_axes {
                        return acc * mid_cell;
                    }
                    idx[k] += 1;
                    if idx[k] < counts[k] {
                        break;
                    }
                    idx[k] = 0;
                    k += 1;
                }
            }
        });
    }
    total
}

/// Exact integral of `1 - prod phi(y - x_i)` along the last axis, with the other
/// coordinates taken from `line`.
fn line_integral(
    inter: &crate::model::RadialStepInteraction,
    points: &[Vec<f64>],
    line: &mut [f64],
    cuts: &mut Vec<f64>,
) -> f64 {
    let last = line.len() - 1;
    cuts.clear();
    for p in points {
        let q: f64 = (0..last).map(|a| (line[a] - p[a]).powi(2)).sum();
        for &b in inter.breakpoints() {
            let rem = b * b - q;
            if rem > 0.0 {
                let half = rem.sqrt();
                cuts.push(p[last] - half);
                cuts.push(p[last] + half);
            }
        }
    }
    if cuts.is_empty() {
        return 0.0;
    }
    cuts.sort_by(f64::total_cmp);
    let mut total = 0.0;
    for i in 1..cuts.len() {
        let len = cuts[i] - cuts[i - 1];
        if len <= 0.0 {
            continue;
        }
        line[last] = 0.5 * (cuts[i] + cuts[i - 1]);
        let prod: f64 = points
            .iter()
            .map(|p| inter.phi_sq(crate::model::dist_sq(line, p)))
            .product();
        total += (1.0 - prod) * len;
    }
    total
}

/// First coordinates of the crossing points of two circles.
fn circle_crossings_x(p: &[f64], a: f64, q: &[f64], b: f64) -> Vec<f64> {
    let (dx, dy) = (q[0] - p[0], q[1] - p[1]);
    let dist = (dx * dx + dy * dy).sqrt();
    if dist == 0.0 || dist > a + b || dist < (a - b).abs() {
        return Vec::new();
    }
    let along = (a * a - b * b + dist * dist) / (2.0 * dist);
    let off = (a * a - along * along).max(0.0).sqrt();
    let (ux, uy) = (dx / dist, dy / dist);
    let base = p[0] + along * ux;
    vec![base - off * uy, base + off * uy]
}

/// Bounds on the `k`-th correlation function at `points`.
///
/// For `k = 1` this is [`intensity_bounds`]. For `k >= 2` the intensity interval is
/// plugged into the generating functional bounds with `g = prod_i phi(. - x_i)` and scaled
/// by `beta^k prod_{i<j} phi(x_i - x_j)`.
pub fn correlation_k_bounds(model: &PairwiseModel, points: &[Vec<f64>]) -> Result<Interval> {
    let d = model.dim();
    if points.is_empty() {
        return Err(Error::Domain("correlation function needs k >= 1 points".into()));
    }
    if let Some(p) = points.iter().find(|p| p.len() != d) {
        return Err(Error::Domain(format!("point {p:?} does not have dimension {d}")));
    }
    let beta = model.beta();
    let g = integral_g(model);
    let lambda = intensity_bounds(beta, g);
    if points.len() == 1 {
        return Ok(lambda);
    }
    let inter = model.interaction();
    let mut prefactor = beta.powi(points.len() as i32);
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            let r2 = crate::model::dist_sq(&points[i], &points[j]);
            if r2 == 0.0 {
                return Err(Error::Domain("correlation points must be pairwise distinct".into()));
            }
            prefactor *= inter.phi_sq(r2);
        }
    }
    if prefactor == 0.0 {
        return Ok(Interval::point(0.0));
    }
    let gk = union_interaction_integral(model, points);
    Ok(pgfl_bounds(lambda, beta, gk)?.scale(prefactor))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::RadialStepInteraction;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn strauss(beta: f64, gamma: f64, r: f64) -> PairwiseModel {
        PairwiseModel::new(2, beta, RadialStepInteraction::strauss(gamma, r).unwrap()).unwrap()
    }

    fn annulus(beta: f64, r: f64, big_r: f64) -> PairwiseModel {
        PairwiseModel::new(2, beta, RadialStepInteraction::hard_annulus(r, big_r).unwrap()).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn interval_rejects_inverted() {
        assert!(Interval::new(2.0, 1.0).is_err());
        assert!(Interval::new(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn pgfl_examples() {
        assert_eq!(pgfl_bounds(Interval::point(10.0), 50.0, 0.0).unwrap(), Interval::point(1.0));
        let g = 0.013;
        let b = pgfl_bounds(Interval::point(50.0), 50.0, g).unwrap();
        assert!(close(b.upper, (-50.0 * g).exp(), 1e-15));
        // mpmath: [0.70547568872595688, 0.75642392999183291]
        let b = pgfl_bounds(Interval::point(37.5), 50.0, PI * 0.0025).unwrap();
        assert!(close(b.lower, 0.705_475_688_725_956_9, 1e-14));
        assert!(close(b.upper, 0.756_423_929_991_832_9, 1e-14));
    }

    #[test]
    fn pgfl_rejects_intensity_above_c_star() {
        assert!(matches!(
            pgfl_bounds(Interval::new(1.0, 60.0).unwrap(), 50.0, 0.01),
            Err(Error::Consistency(_))
        ));
    }

    #[test]
    fn hard_annulus_intensity_values() {
        let m = annulus(3000.0, 0.05, 2f64.sqrt() * 0.05);
        let s = intensity_summary(&m);
        assert_eq!(format!("{:.1}", s.lower), "122.1");
        assert_eq!(format!("{:.1}", s.lambda_ps), "295.2");
        assert_eq!(format!("{:.1}", s.upper), "1500.0");
        assert_eq!(s.lambda_mf, 0.0);
        // mpmath values
        assert!(close(s.lower, 122.140_164_876_156_43, 1e-10));
        assert!(close(s.lambda_ps, 295.219_490_143_827_8, 1e-9));
    }

    #[test]
    fn intensity_bounds_examples() {
        assert_eq!(intensity_bounds(50.0, 0.0), Interval::point(50.0));
        let b = intensity_bounds(50.0, PI * 0.0025);
        assert!(close(b.lower, 35.901_509_993_826_69, 1e-11));
        assert!(close(b.upper, 37.742_454_887_919_91, 1e-11));
    }

    #[test]
    fn approximations() {
        assert_eq!(lambda_ps(70.0, 0.0), 70.0);
        assert_eq!(lambda_mf(70.0, 0.0), 70.0);
        assert_eq!(lambda_mf(70.0, f64::INFINITY), 0.0);
        let m = strauss(100.0, 0.5, 0.05);
        let s = intensity_summary(&m);
        assert!(close(s.lambda_ps, 74.604_394_551_829_55, 1e-9));
        assert!(close(s.lambda_mf, 68.771_055_491_546_83, 1e-9));
        let p = strauss(100.0, 1.0, 0.05);
        let s = intensity_summary(&p);
        assert_eq!((s.lower, s.lambda_ps, s.lambda_mf, s.upper), (100.0, 100.0, 100.0, 100.0));
    }

    #[test]
    fn ps_bracket_examples() {
        let c = lambda_ps_bounds_check(3000.0, PI * 0.0025);
        assert!(c.holds);
        assert!(close(c.lower, 122.1, 0.05) && close(c.lambda_ps, 295.2, 0.05) && close(c.upper, 1500.0, 0.05));
        let c = lambda_ps_bounds_check(7.0, 0.0);
        assert!(c.holds && c.lower == 7.0 && c.lambda_ps == 7.0 && c.upper == 7.0);
    }

    #[test]
    fn f_bounds_examples() {
        let lam = Interval::new(35.90, 37.74).unwrap();
        let b = f_bounds(lam, 50.0, 2, &[0.0, 0.05]).unwrap();
        assert_eq!(b.bands[0], Interval::point(0.0));
        // mpmath with the rounded interval: [0.23318349102115196, 0.29640926686619699]
        assert!(close(b.bands[1].lower, 0.233_183_491_021_151_96, 1e-14));
        assert!(close(b.bands[1].upper, 0.296_409_266_866_197, 1e-14));
        // Poisson: lower bound is exact
        let b = f_bounds(Interval::point(50.0), 50.0, 2, &[0.03]).unwrap();
        assert!(close(b.bands[0].lower, 1.0 - (-50.0 * PI * 0.0009f64).exp(), 1e-15));
    }

    #[test]
    fn grid_validation() {
        let lam = Interval::point(1.0);
        assert!(f_bounds(lam, 2.0, 2, &[0.1, 0.05]).is_err());
        assert!(f_bounds(lam, 2.0, 2, &[-0.1]).is_err());
    }

    #[test]
    fn g_bounds_examples() {
        let pois = strauss(50.0, 1.0, 0.05);
        let b = g_bounds(&pois, Interval::point(50.0), &[0.0, 0.02]).unwrap();
        assert_eq!(b.bands[0], Interval::point(0.0));
        let v = 50.0 * PI * 0.0004;
        assert!(close(b.bands[1].lower, 1.0 - (-v).exp(), 1e-15));
        assert!(close(b.bands[1].upper, v, 1e-15));

        let m = annulus(70.0, 0.025, 0.035);
        let lam = intensity_bounds(70.0, integral_g(&m));
        assert!(close(lam.lower, 61.840_357_112_765_055, 1e-10));
        assert!(close(lam.upper, 62.299_059_806_735_62, 1e-10));
        let b = g_bounds(&m, lam, &[0.0]).unwrap();
        let g = integral_g(&m);
        let want_lo = (2.0 - 70.0 / lam.lower - (-70.0 * g).exp()).max(0.0);
        let want_hi = (1.0 - 70.0 / lam.upper + 70.0 * g).min(1.0);
        assert!(close(b.bands[0].lower, want_lo, 1e-15));
        assert!(close(b.bands[0].upper, want_hi, 1e-15));

        assert!(matches!(
            g_bounds(&m, Interval::new(0.0, 10.0).unwrap(), &[0.0]),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn pcf_examples() {
        let hc = PairwiseModel::new(2, 40.0, RadialStepInteraction::hard_core(0.05).unwrap()).unwrap();
        let lam = intensity_bounds(40.0, integral_g(&hc));
        let b = pcf_bounds(&hc, lam, &[0.01, 0.049, 0.05]).unwrap();
        assert!(b.bands.iter().all(|i| *i == Interval::point(0.0)));
        let pois = strauss(40.0, 1.0, 0.05);
        let b = pcf_bounds(&pois, Interval::point(40.0), &[0.2]).unwrap();
        assert!(close(b.bands[0].lower, 1.0, 1e-15) && close(b.bands[0].upper, 1.0, 1e-15));
        // Strauss hard core at s = 0.08 with the plug-in interval
        let b = pcf_bounds(&hc, lam, &[0.08]).unwrap();
        let gx = g_tilde_x(&hc, 0.08);
        let lo = 1600.0 / lam.upper.powi(2) - 1600.0 * gx / lam.upper;
        let hi = 1600.0 / lam.lower.powi(2) - 40.0 / lam.lower * (1.0 - (-40.0 * gx).exp());
        assert!(close(b.bands[0].lower, lo.min(1600.0 / lam.lower.powi(2) - 1600.0 * gx / lam.lower), 1e-12));
        assert!(close(b.bands[0].upper, hi, 1e-12));
        assert!(b.bands[0].lower < 1.0 && b.bands[0].upper > 1.0);
    }

    #[test]
    fn pcf_includes_interior_vertex() {
        // Gx = 0.02 puts the lower parabola's vertex at lambda = 100.
        let m = PairwiseModel::new(2, 200.0, RadialStepInteraction::hard_core(0.0564).unwrap()).unwrap();
        let s = 0.2;
        let gx = g_tilde_x(&m, s);
        let vertex = 2.0 / gx;
        let lam = Interval::new(vertex * 0.97, vertex * 1.013).unwrap();
        let b = pcf_band_at(&m, lam, s, 2);
        let at_vertex = 200.0f64.powi(2) / vertex.powi(2) - 200.0f64.powi(2) * gx / vertex;
        assert!(b.lower <= at_vertex.max(0.0) + 1e-15);
    }

    #[test]
    fn k_examples() {
        let hc = PairwiseModel::new(2, 40.0, RadialStepInteraction::hard_core(0.05).unwrap()).unwrap();
        let lam = intensity_bounds(40.0, integral_g(&hc));
        let b = k_bounds(&hc, lam, &[0.01, 0.03, 0.05]).unwrap();
        assert!(b.bands.iter().all(|i| i.lower == 0.0 && i.upper == 0.0));

        let pois = strauss(40.0, 1.0, 0.05);
        let grid: Vec<f64> = (0..=20).map(|i| i as f64 * 0.01).collect();
        let b = k_bounds(&pois, Interval::point(40.0), &grid).unwrap();
        for (t, i) in grid.iter().zip(&b.bands) {
            assert!(close(i.lower, PI * t * t, 1e-12) && close(i.upper, PI * t * t, 1e-12));
        }

        let b = k_bounds(&hc, lam, &[0.05, 0.08, 0.1]).unwrap();
        assert!(b.bands.windows(2).all(|w| w[1].lower >= w[0].lower && w[1].upper >= w[0].upper));
        // the hard core bracket at 0.1 sits below the Poisson value near the core
        assert!(b.bands[2].lower < PI * 0.01 && b.bands[2].upper > 0.0);
    }

    #[test]
    fn k_matches_direct_quadrature_of_pcf_band() {
        // independent route: fine composite midpoint rule over the pcf band
        let m = strauss(40.0, 0.3, 0.05);
        let lam = intensity_bounds(40.0, integral_g(&m));
        let t = 0.12;
        let b = k_bounds(&m, lam, &[t]).unwrap().bands[0];
        let n = 40_000;
        let h = t / n as f64;
        let (mut lo, mut hi) = (0.0, 0.0);
        for i in 0..n {
            let s = (i as f64 + 0.5) * h;
            let band = pcf_band_at(&m, lam, s, PCF_LAMBDA_GRID);
            lo += 2.0 * PI * s * band.lower * h;
            hi += 2.0 * PI * s * band.upper * h;
        }
        assert!(close(b.lower, lo, 1e-6), "{} vs {lo}", b.lower);
        assert!(close(b.upper, hi, 1e-6), "{} vs {hi}", b.upper);
    }

    #[test]
    fn correlation_k_examples() {
        let m = strauss(50.0, 0.4, 0.05);
        let one = correlation_k_bounds(&m, &[vec![0.3, 0.3]]).unwrap();
        assert_eq!(one, intensity_bounds(50.0, integral_g(&m)));
        assert!(matches!(correlation_k_bounds(&m, &[]), Err(Error::Domain(_))));
        let hc = PairwiseModel::new(2, 50.0, RadialStepInteraction::hard_core(0.05).unwrap()).unwrap();
        let z = correlation_k_bounds(&hc, &[vec![0.0, 0.0], vec![0.03, 0.0]]).unwrap();
        assert_eq!(z, Interval::point(0.0));
    }

    #[test]
    fn union_integral_accuracy() {
        let m = strauss(50.0, 0.4, 0.05);
        let g = integral_g(&m);
        let one = union_interaction_integral(&m, &[vec![0.0, 0.0]]);
        assert!((one - g).abs() < 1e-4 * g, "{one} vs {g}");
        let far = union_interaction_integral(&m, &[vec![0.0, 0.0], vec![0.5, 0.1]]);
        assert!((far - 2.0 * g).abs() < 1e-4 * 2.0 * g);
        for s in [0.0001, 0.02, 0.06, 0.099] {
            let two = union_interaction_integral(&m, &[vec![0.0, 0.0], vec![s * 0.6, s * 0.8]]);
            let want = g_tilde_x(&m, s);
            assert!((two - want).abs() < 1e-4 * want, "s={s}: {two} vs {want}");
        }
        let a = annulus(70.0, 0.025, 0.035);
        for s in [0.01, 0.04, 0.065] {
            let two = union_interaction_integral(&a, &[vec![0.1, 0.1], vec![0.1 + s, 0.1]]);
            let want = g_tilde_x(&a, s);
            assert!((two - want).abs() < 1e-4 * want, "s={s}: {two} vs {want}");
        }
    }

    #[test]
    fn pair_correlation_consistent_with_pcf_band() {
        // lambda_2 bounds equal lambda^2 times the pcf expressions at the matching endpoint
        let m = strauss(40.0, 0.3, 0.05);
        let lam = intensity_bounds(40.0, integral_g(&m));
        for s in [0.03, 0.07, 0.15] {
            let two = correlation_k_bounds(&m, &[vec![0.0, 0.0], vec![s, 0.0]]).unwrap();
            let phi = m.interaction().phi(s);
            let gx = g_tilde_x(&m, s);
            let lo = phi * (1600.0 - 1600.0 * gx * lam.upper);
            let hi = phi * (1600.0 - 40.0 * lam.lower * (1.0 - (-40.0 * gx).exp()));
            assert!((two.lower - lo).abs() < 1e-4 * lo, "s={s}");
            assert!((two.upper - hi).abs() < 1e-4 * hi, "s={s}");
            // and rho * lambda^2 from the pcf band at each endpoint lies inside
            let band = pcf_band_at(&m, lam, s, PCF_LAMBDA_GRID);
            assert!(band.lower * lam.upper.powi(2) <= two.upper * (1.0 + 1e-4));
            assert!(band.upper * lam.lower.powi(2) >= two.lower * (1.0 - 1e-4));
        }
        let far = correlation_k_bounds(&m, &[vec![0.0, 0.0], vec![0.5, 0.0]]).unwrap();
        let direct = pgfl_bounds(lam, 40.0, 2.0 * integral_g(&m)).unwrap();
        assert!((far.lower - 1600.0 * direct.lower).abs() < 1e-3);
        assert!((far.upper - 1600.0 * direct.upper).abs() < 1e-3);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn ps_lies_inside_intensity_bounds(beta in 1e-6f64..=1e4, g in 1e-9f64..=10.0) {
            prop_assert!(lambda_ps_bounds_check(beta, g).holds);
        }

        #[test]
        fn pgfl_ordered_and_in_unit_interval(c in 1e-3f64..1e4, frac in 0.0f64..=1.0, g in 0.0f64..10.0) {
            let lam = Interval::point(c * frac);
            let b = pgfl_bounds(lam, c, g).unwrap();
            prop_assert!(b.lower <= b.upper && b.lower >= 0.0 && b.upper <= 1.0);
        }
    }

    proptest! {
        #[test]
        fn intensity_bounds_ordered_and_monotone(beta in 0.01f64..1e4, g in 0.0f64..1.0) {
            let b = intensity_bounds(beta, g);
            prop_assert!(b.lower <= b.upper);
            prop_assert!(intensity_bounds(beta * 1.01, g).lower >= b.lower);
        }

        #[test]
        fn mean_field_below_saddlepoint(beta in 1.0f64..500.0, gamma in 0.001f64..1.0, r in 0.01f64..0.1) {
            let m = strauss(beta, gamma, r);
            let s = intensity_summary(&m);
            prop_assert!(s.lambda_mf <= s.lambda_ps * (1.0 + 1e-12));
        }

        #[test]
        fn curve_bands_in_range(beta in 5.0f64..200.0, gamma in 0.0f64..1.0, r in 0.01f64..0.08) {
            let m = strauss(beta, gamma, r);
            let lam = intensity_bounds(beta, integral_g(&m));
            let grid: Vec<f64> = (0..12).map(|i| i as f64 * 0.015).collect();
            let f = f_bounds(lam, beta, 2, &grid).unwrap();
            let g = g_bounds(&m, lam, &grid).unwrap();
            let k = k_bounds(&m, lam, &grid).unwrap();
            for b in f.bands.iter().chain(&g.bands) {
                prop_assert!(0.0 <= b.lower && b.lower <= b.upper && b.upper <= 1.0);
            }
            for w in k.bands.windows(2) {
                prop_assert!(w[0].lower >= 0.0 && w[0].lower <= w[0].upper);
                prop_assert!(w[1].lower >= w[0].lower && w[1].upper >= w[0].upper);
            }
        }

        #[test]
        fn pcf_grid_refinement_does_not_widen(beta in 5.0f64..300.0, gamma in 0.0f64..1.0, r in 0.01f64..0.08, s in 0.0f64..0.3) {
            let m = strauss(beta, gamma, r);
            let lam = intensity_bounds(beta, integral_g(&m));
            let coarse = pcf_band_at(&m, lam, s, 16);
            let fine = pcf_band_at(&m, lam, s, 64);
            prop_assert!(coarse.lower - fine.lower <= 1e-9);
            prop_assert!(fine.upper - coarse.upper <= 1e-9);
        }
    }
}

//! Pairwise interaction processes with isotropic step interactions, and the
//! deterministic interaction integrals the bound formulas consume.

use std::f64::consts::PI;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::GaussLegendre;

/// Axis-aligned box `[lower, upper]` in `R^d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "WindowRepr")]
pub struct Window {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

#[derive(Deserialize)]
struct WindowRepr {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl TryFrom<WindowRepr> for Window {
    type Error = Error;

    fn try_from(w: WindowRepr) -> Result<Self> {
        Window::new(w.lower, w.upper)
    }
}

impl Window {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() || lower.len() != upper.len() {
            return Err(Error::InvalidParameter(format!(
                "window corners must be nonempty and of equal dimension ({} vs {})",
                lower.len(),
                upper.len()
            )));
        }
        for (i, (&lo, &hi)) in lower.iter().zip(&upper).enumerate() {
            if !(lo.is_finite() && hi.is_finite() && hi > lo) {
                return Err(Error::InvalidParameter(format!(
                    "window needs lower < upper in every coordinate; coordinate {i} has [{lo}, {hi}]"
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    /// `[0, 1]^d`.
    pub fn unit_cube(d: usize) -> Self {
        Self::new(vec![0.0; d], vec![1.0; d]).expect("unit cube is a valid window")
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn side(&self, axis: usize) -> f64 {
        self.upper[axis] - self.lower[axis]
    }

    pub fn volume(&self) -> f64 {
        (0..self.dim()).map(|i| self.side(i)).product()
    }

    /// Closed-box membership.
    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(&v, (&lo, &hi))| v >= lo && v <= hi)
    }

    /// Whether `other` lies inside `self`.
    pub fn contains_window(&self, other: &Window) -> bool {
        other.dim() == self.dim() && self.contains(&other.lower) && self.contains(&other.upper)
    }

    /// Grows the box by `r` on every side.
    pub fn dilate(&self, r: f64) -> Window {
        Window {
            lower: self.lower.iter().map(|v| v - r).collect(),
            upper: self.upper.iter().map(|v| v + r).collect(),
        }
    }

    /// Common part of two boxes; `None` when it has no interior.
    pub fn intersect(&self, other: &Window) -> Option<Window> {
        if self.dim() != other.dim() {
            return None;
        }
        Window::new(
            self.lower.iter().zip(&other.lower).map(|(a, b)| a.max(*b)).collect(),
            self.upper.iter().zip(&other.upper).map(|(a, b)| a.min(*b)).collect(),
        )
        .ok()
    }

    /// Shrinks the box by `r` on every side; `None` once nothing is left.
    pub fn erode(&self, r: f64) -> Option<Window> {
        Window::new(
            self.lower.iter().map(|v| v + r).collect(),
            self.upper.iter().map(|v| v - r).collect(),
        )
        .ok()
    }

    /// Distance from an interior point to the box boundary.
    pub fn boundary_distance(&self, x: &[f64]) -> f64 {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(&v, (&lo, &hi))| (v - lo).min(hi - v))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Model JSON form of an interaction function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "params", rename_all = "snake_case")]
pub enum InteractionSpec {
    Strauss {
        gamma: f64,
        r: f64,
    },
    Hardcore {
        r: f64,
    },
    HardAnnulus {
        r: f64,
        #[serde(rename = "R")]
        big_r: f64,
    },
    Step {
        breakpoints: Vec<f64>,
        values: Vec<f64>,
    },
}

/// Model JSON: `{"d": .., "beta": .., "interaction": {"type": .., "params": {..}}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub d: usize,
    pub beta: f64,
    pub interaction: InteractionSpec,
}

/// Piecewise-constant isotropic interaction function.
///
/// `phi(x) = values[i]` for `breakpoints[i-1] < |x| <= breakpoints[i]` (with an implicit
/// leading breakpoint 0) and `phi(x) = 1` beyond the last breakpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialStepInteraction {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
    breakpoints_sq: Vec<f64>,
    spec: InteractionSpec,
}

impl RadialStepInteraction {
    pub fn step(breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let spec = InteractionSpec::Step {
            breakpoints: breakpoints.clone(),
            values: values.clone(),
        };
        Self::build(breakpoints, values, spec)
    }

    /// `phi = gamma` on `|x| <= r`.
    pub fn strauss(gamma: f64, r: f64) -> Result<Self> {
        Self::build(vec![r], vec![gamma], InteractionSpec::Strauss { gamma, r })
    }

    pub fn hard_core(r: f64) -> Result<Self> {
        Self::build(vec![r], vec![0.0], InteractionSpec::Hardcore { r })
    }

    /// No interaction within `r`, exclusion on `(r, big_r]`.
    pub fn hard_annulus(r: f64, big_r: f64) -> Result<Self> {
        let spec = InteractionSpec::HardAnnulus { r, big_r };
        if !(r >= 0.0 && big_r >= r) {
            return Err(Error::InvalidParameter(format!(
                "hard annulus needs 0 <= r <= R, got r={r}, R={big_r}"
            )));
        }
        if r == 0.0 {
            Self::build(vec![big_r], vec![0.0], spec)
        } else if r == big_r {
            Self::build(vec![big_r], vec![1.0], spec)
        } else {
            Self::build(vec![r, big_r], vec![1.0, 0.0], spec)
        }
    }

    pub fn from_spec(spec: &InteractionSpec) -> Result<Self> {
        match *spec {
            InteractionSpec::Strauss { gamma, r } => Self::strauss(gamma, r),
            InteractionSpec::Hardcore { r } => Self::hard_core(r),
            InteractionSpec::HardAnnulus { r, big_r } => Self::hard_annulus(r, big_r),
            InteractionSpec::Step {
                ref breakpoints,
                ref values,
            } => Self::step(breakpoints.clone(), values.clone()),
        }
    }

    fn build(breakpoints: Vec<f64>, values: Vec<f64>, spec: InteractionSpec) -> Result<Self> {
        if breakpoints.is_empty() || breakpoints.len() != values.len() {
            return Err(Error::InvalidParameter(format!(
                "step interaction needs k >= 1 breakpoints and as many values ({} vs {})",
                breakpoints.len(),
                values.len()
            )));
        }
        let mut prev = 0.0;
        for &s in &breakpoints {
            if !(s.is_finite() && s > prev) {
                return Err(Error::InvalidParameter(format!(
                    "breakpoints must be finite, positive and strictly increasing: {breakpoints:?}"
                )));
            }
            prev = s;
        }
        for &v in &values {
            if v.is_nan() || v < 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "interaction values must be nonnegative: {values:?}"
                )));
            }
            if v > 1.0 {
                return Err(Error::NotInhibitory(format!(
                    "interaction values must lie in [0, 1], got {values:?}"
                )));
            }
        }
        let breakpoints_sq = breakpoints.iter().map(|s| s * s).collect();
        Ok(Self {
            breakpoints,
            values,
            breakpoints_sq,
            spec,
        })
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn spec(&self) -> &InteractionSpec {
        &self.spec
    }

    /// Interaction range `s_k`.
    pub fn range(&self) -> f64 {
        *self.breakpoints.last().unwrap()
    }

    /// Whether `phi == 1` identically.
    pub fn is_trivial(&self) -> bool {
        self.values.iter().all(|&v| v == 1.0)
    }

    /// Whether the interaction forbids some distances outright.
    pub fn has_hard_part(&self) -> bool {
        self.values.iter().any(|&v| v == 0.0)
    }

    pub fn phi(&self, r: f64) -> f64 {
        self.phi_sq(r * r)
    }

    /// `phi` evaluated from a squared distance.
    #[inline]
    pub fn phi_sq(&self, r2: f64) -> f64 {
        for (i, &b) in self.breakpoints_sq.iter().enumerate() {
            if r2 <= b {
                return self.values[i];
            }
        }
        1.0
    }

    /// Iterator over `(inner radius, outer radius, value)` cells.
    pub fn cells(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.breakpoints
            .iter()
            .enumerate()
            .map(|(i, &s)| (if i == 0 { 0.0 } else { self.breakpoints[i - 1] }, s, self.values[i]))
    }
}

/// `PIP(beta, phi)` on `R^d`: conditional intensity `beta * prod phi(x - y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairwiseModel {
    dim: usize,
    beta: f64,
    interaction: RadialStepInteraction,
}

impl PairwiseModel {
    pub fn new(dim: usize, beta: f64, interaction: RadialStepInteraction) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("dimension must be positive".into()));
        }
        if !(beta.is_finite() && beta > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "activity beta must be positive and finite, got {beta}"
            )));
        }
        Ok(Self {
            dim,
            beta,
            interaction,
        })
    }

    pub fn from_spec(spec: &ModelSpec) -> Result<Self> {
        Self::new(
            spec.d,
            spec.beta,
            RadialStepInteraction::from_spec(&spec.interaction)?,
        )
    }

    pub fn to_spec(&self) -> ModelSpec {
        ModelSpec {
            d: self.dim,
            beta: self.beta,
            interaction: self.interaction.spec.clone(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Local stability constant; `phi <= 1` makes `beta` valid.
    pub fn c_star(&self) -> f64 {
        self.beta
    }

    pub fn interaction(&self) -> &RadialStepInteraction {
        &self.interaction
    }

    pub fn range(&self) -> f64 {
        self.interaction.range()
    }
}

/// Finite simple point configuration in a window. Coordinates are stored flat.
#[derive(Debug, Clone, PartialEq)]
pub struct PointPattern {
    window: Window,
    coords: Vec<f64>,
}

impl PointPattern {
    pub fn empty(window: Window) -> Self {
        Self {
            window,
            coords: Vec::new(),
        }
    }

    pub fn new(window: Window, points: &[Vec<f64>]) -> Result<Self> {
        let d = window.dim();
        let mut coords = Vec::with_capacity(points.len() * d);
        for p in points {
            if p.len() != d {
                return Err(Error::InvalidParameter(format!(
                    "point {p:?} does not have dimension {d}"
                )));
            }
            coords.extend_from_slice(p);
        }
        Self::from_flat(window, coords)
    }

    /// Builds from row-major flat coordinates, checking membership and distinctness.
    pub fn from_flat(window: Window, coords: Vec<f64>) -> Result<Self> {
        let d = window.dim();
        if coords.len() % d != 0 {
            return Err(Error::InvalidParameter(format!(
                "{} coordinates do not split into points of dimension {d}",
                coords.len()
            )));
        }
        if let Some(p) = coords.chunks_exact(d).find(|p| !window.contains(p)) {
            return Err(Error::InvalidParameter(format!("point {p:?} lies outside the window")));
        }
        let mut order: Vec<&[f64]> = coords.chunks_exact(d).collect();
        order.sort_by(|a, b| {
            a.iter()
                .zip(b.iter())
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        if let Some(w) = order.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidParameter(format!(
                "duplicate point {:?}; patterns must be simple",
                w[0]
            )));
        }
        Ok(Self { window, coords })
    }

    /// Skips validation; callers guarantee the invariants.
    pub(crate) fn from_flat_unchecked(window: Window, coords: Vec<f64>) -> Self {
        Self { window, coords }
    }

    pub fn window(&self) -> &Window {
        &self.window
    }

    pub fn dim(&self) -> usize {
        self.window.dim()
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        let d = self.dim();
        &self.coords[i * d..(i + 1) * d]
    }

    pub fn points(&self) -> std::slice::ChunksExact<'_, f64> {
        self.coords.chunks_exact(self.dim())
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// Points falling in `sub`, keeping `sub` as the new window.
    pub fn restrict(&self, sub: &Window) -> PointPattern {
        let coords = self
            .points()
            .filter(|p| sub.contains(p))
            .flatten()
            .copied()
            .collect();
        PointPattern::from_flat_unchecked(sub.clone(), coords)
    }

    /// Number of points inside `sub`.
    pub fn count_in(&self, sub: &Window) -> usize {
        self.points().filter(|p| sub.contains(p)).count()
    }
}

pub(crate) fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub fn phi(interaction: &RadialStepInteraction, r: f64) -> f64 {
    interaction.phi(r)
}

/// `beta * prod_y phi(|x - y|)`, leaving out a pattern point that coincides with `x`.
pub fn cond_intensity(model: &PairwiseModel, x: &[f64], pattern: &PointPattern) -> f64 {
    let mut prod = model.beta;
    for y in pattern.points() {
        let r2 = dist_sq(x, y);
        if r2 == 0.0 {
            continue;
        }
        prod *= model.interaction.phi_sq(r2);
        if prod == 0.0 {
            break;
        }
    }
    prod
}

/// Volume of the unit ball in `R^d`.
pub fn ball_volume(d: usize) -> f64 {
    // alpha_d = alpha_{d-2} * 2 pi / d
    let mut a = if d % 2 == 0 { 1.0 } else { 2.0 };
    let mut k = if d % 2 == 0 { 2 } else { 3 };
    while k <= d {
        a *= 2.0 * PI / k as f64;
        k += 2;
    }
    a
}

/// `int 1 - phi(x) dx`.
pub fn integral_g(model: &PairwiseModel) -> f64 {
    let a = ball_volume(model.dim);
    let d = model.dim as i32;
    model
        .interaction
        .cells()
        .map(|(lo, hi, v)| (1.0 - v) * a * (hi.powi(d) - lo.powi(d)))
        .sum()
}

/// `-int log phi(x) dx`; infinite when the interaction has a hard part.
pub fn integral_gamma(model: &PairwiseModel) -> f64 {
    if model.interaction.has_hard_part() {
        return f64::INFINITY;
    }
    let a = ball_volume(model.dim);
    let d = model.dim as i32;
    model
        .interaction
        .cells()
        .map(|(lo, hi, v)| (-v.ln()).max(0.0) * a * (hi.powi(d) - lo.powi(d)))
        .sum()
}

/// `int 1 - phi(x) 1{|x| > t} dx`.
pub fn g_tilde_t(model: &PairwiseModel, t: f64) -> f64 {
    let a = ball_volume(model.dim);
    let d = model.dim as i32;
    let outside: f64 = model
        .interaction
        .cells()
        .map(|(lo, hi, v)| (1.0 - v) * a * (hi.max(t).powi(d) - lo.max(t).powi(d)))
        .sum();
    a * t.powi(d) + outside
}

/// `int 1 - phi(y) phi(y - x) dy` for `|x| = s`.
///
/// Uses the closed form for a single-step interaction in the plane, and
/// [`g_tilde_x_quadrature`] otherwise.
pub fn g_tilde_x(model: &PairwiseModel, s: f64) -> f64 {
    if model.dim == 2 && model.interaction.breakpoints.len() == 1 {
        strauss_plane_g_tilde_x(model.interaction.values[0], model.interaction.breakpoints[0], s)
    } else {
        g_tilde_x_quadrature(model, s)
    }
}

/// Closed form of `g_tilde_x` for the planar Strauss interaction.
pub fn strauss_plane_g_tilde_x(gamma: f64, r: f64, s: f64) -> f64 {
    let full = 2.0 * PI * r * r * (1.0 - gamma);
    if s >= 2.0 * r {
        return full;
    }
    let u = s / (2.0 * r);
    full - 2.0 * r * r * (1.0 - gamma).powi(2) * (u.acos() - u * (1.0 - u * u).sqrt())
}

const RADIAL_NODES: usize = 256;

fn radial_rule() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(RADIAL_NODES))
}

/// Generic `g_tilde_x` for any step interaction and dimension.
///
/// Writes the integral as `G + int (1 - phi(z)) phi(z + x) dz` over the interaction ball and
/// integrates in polar coordinates about `x`. For each radius the angular average of
/// `phi(z + x)` is exact, because `|z + x|` only depends on the cosine between `z` and
/// `x`, whose law on the sphere is known in closed form. The remaining radial integral is
/// Gauss-Legendre with panels split at every radius where the integrand has a kink.
pub fn g_tilde_x_quadrature(model: &PairwiseModel, s: f64) -> f64 {
    let g = integral_g(model);
    let inter = &model.interaction;
    let d = model.dim;
    let surface = d as f64 * ball_volume(d);
    let reach = inter.range();

    let mut breaks: Vec<f64> = inter.breakpoints.clone();
    for &a in &inter.breakpoints {
        breaks.push((a - s).abs());
        breaks.push(a + s);
    }
    let sphere = SphereCosine::new(d);

    let integrand = |rho: f64| {
        let w = 1.0 - inter.phi(rho);
        if w == 0.0 {
            return 0.0;
        }
        // P(|rho u + x| <= a) for u uniform on the sphere
        let within = |a: f64| -> f64 {
            if rho == 0.0 || s == 0.0 {
                let dist = if rho == 0.0 { s } else { rho };
                return if dist <= a { 1.0 } else { 0.0 };
            }
            sphere.cdf((a * a - rho * rho - s * s) / (2.0 * rho * s))
        };
        let mut avg = 0.0;
        let mut prev = 0.0;
        for (_, hi, v) in inter.cells() {
            let p = within(hi);
            avg += v * (p - prev);
            prev = p;
        }
        avg += 1.0 - prev;
        w * surface * rho.powi(d as i32 - 1) * avg
    };
    g + radial_rule().integrate_split(0.0, reach, &breaks, integrand)
}

/// Law of `<u, e>` for `u` uniform on the unit sphere in `R^d`.
struct SphereCosine {
    d: usize,
    total: f64,
}

impl SphereCosine {
    fn new(d: usize) -> Self {
        let total = if d >= 4 { sin_power_integral(d - 2, PI) } else { 1.0 };
        Self { d, total }
    }

    /// `P(<u, e> <= c)`.
    fn cdf(&self, c: f64) -> f64 {
        if c < -1.0 {
            return 0.0;
        }
        if c >= 1.0 {
            return 1.0;
        }
        match self.d {
            1 => 0.5,
            2 => 1.0 - c.acos() / PI,
            3 => 0.5 * (1.0 + c),
            d => 1.0 - sin_power_integral(d - 2, c.acos()) / self.total,
        }
    }
}

/// `int_0^theta sin^n`.
fn sin_power_integral(n: usize, theta: f64) -> f64 {
    let (s, c) = theta.sin_cos();
    let mut even = theta; // I_0
    let mut odd = 1.0 - c; // I_1
    if n == 0 {
        return even;
    }
    if n == 1 {
        return odd;
    }
    let mut k = 2;
    while k <= n {
        let kf = k as f64;
        let term = -s.powi(k as i32 - 1) * c / kf;
        if k % 2 == 0 {
            even = term + (kf - 1.0) / kf * even;
        } else {
            odd = term + (kf - 1.0) / kf * odd;
        }
        k += 1;
    }
    if n % 2 == 0 {
        even
    } else {
        odd
    }
}

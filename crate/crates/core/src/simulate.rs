//! Samplers for Poisson and inhibitory pairwise interaction processes.
//!
//! Three samplers share a cell-list neighbour index: a Poisson sampler, a birth–death
//! Metropolis–Hastings chain, and dominated coupling from the past (exact draws). The
//! spatial immigration–death process is simulated through its count chain only.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Poisson};

use crate::error::{Error, Result};
use crate::grid::GridIndex;
use crate::model::{PairwiseModel, PointPattern, RadialStepInteraction, Window};
use crate::rng::RngSeed;

/// Boundary treatment of the simulation window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Boundary {
    /// Points outside the window do not exist.
    #[default]
    Free,
    /// The window is a torus; distances use the minimum image.
    Periodic,
}

/// Default cap on dominating-process events before dCFTP gives up.
pub const DEFAULT_MAX_EVENTS: u64 = 1 << 30;

/// Sampler choice for replicate runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sampler {
    /// Homogeneous Poisson process with intensity `beta`, ignoring the interaction.
    Poisson,
    /// Birth–death Metropolis–Hastings run for a fixed number of steps from empty.
    Mh { steps: u64 },
    /// Dominated coupling from the past.
    Dcftp { max_events: u64 },
}

impl Sampler {
    pub fn dcftp() -> Self {
        Sampler::Dcftp {
            max_events: DEFAULT_MAX_EVENTS,
        }
    }

    /// Draws one pattern on `window`.
    pub fn sample(
        &self,
        model: &PairwiseModel,
        window: &Window,
        rng: RngSeed,
        boundary: Boundary,
    ) -> Result<PointPattern> {
        match *self {
            Sampler::Poisson => sample_poisson(window, model.beta(), rng),
            Sampler::Mh { steps } => sample_mh_with(model, window, steps, rng, boundary),
            Sampler::Dcftp { max_events } => sample_dcftp_with(
                model,
                window,
                rng,
                DcftpOptions {
                    max_events,
                    boundary,
                },
            ),
        }
    }
}

fn uniform_point(rng: &mut ChaCha8Rng, window: &Window, out: &mut Vec<f64>) {
    for (lo, hi) in window.lower().iter().zip(window.upper()) {
        out.push(lo + rng.random::<f64>() * (hi - lo));
    }
}

fn poisson_count(rng: &mut ChaCha8Rng, mean: f64) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    let dist = Poisson::new(mean).expect("positive finite Poisson mean");
    dist.sample(rng) as u64
}

fn exp1(rng: &mut ChaCha8Rng) -> f64 {
    Exp1.sample(rng)
}

/// Homogeneous Poisson process: Poisson count, i.i.d. uniform locations.
pub fn sample_poisson(window: &Window, intensity: f64, rng: RngSeed) -> Result<PointPattern> {
    if !(intensity.is_finite() && intensity >= 0.0) {
        return Err(Error::Domain(format!(
            "Poisson intensity must be finite and nonnegative, got {intensity}"
        )));
    }
    let mut rng = rng.rng();
    let n = poisson_count(&mut rng, intensity * window.volume());
    let mut coords = Vec::with_capacity(n as usize * window.dim());
    for _ in 0..n {
        uniform_point(&mut rng, window, &mut coords);
    }
    Ok(PointPattern::from_flat_unchecked(window.clone(), coords))
}

fn check_model_window(model: &PairwiseModel, window: &Window) -> Result<()> {
    if model.dim() != window.dim() {
        return Err(Error::Domain(format!(
            "model dimension {} does not match window dimension {}",
            model.dim(),
            window.dim()
        )));
    }
    Ok(())
}

/// Grid over `window` with cells no narrower than the interaction range. Trivial
/// interactions get a single cell since no neighbour query is ever made.
fn interaction_grid(model: &PairwiseModel, window: &Window, boundary: Boundary) -> GridIndex {
    let range = model.range();
    let min_cell = if model.interaction().is_trivial() || range <= 0.0 {
        f64::INFINITY
    } else {
        range
    };
    GridIndex::new(window, min_cell, boundary == Boundary::Periodic)
}

/// Mutable configuration used by the Metropolis–Hastings chain.
struct Configuration<'a> {
    dim: usize,
    coords: Vec<f64>,
    grid: GridIndex,
    interaction: &'a RadialStepInteraction,
    range: f64,
    trivial: bool,
}

impl<'a> Configuration<'a> {
    fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    /// `prod_y phi(|x - y|)` over stored points other than `skip`.
    fn interaction_product(&self, x: &[f64], skip: Option<u32>) -> f64 {
        if self.trivial {
            return 1.0;
        }
        let mut prod = 1.0;
        self.grid
            .for_each_within(x, self.range, &self.coords, |id, d2| {
                if Some(id) != skip && prod > 0.0 {
                    prod *= self.interaction.phi_sq(d2);
                }
            });
        prod
    }

    fn push(&mut self, x: &[f64]) {
        let id = self.len() as u32;
        self.coords.extend_from_slice(x);
        self.grid.insert(id, x);
    }

    fn swap_remove(&mut self, i: usize) {
        let d = self.dim;
        let last = self.len() - 1;
        self.grid.remove(i as u32, &self.coords[i * d..(i + 1) * d]);
        if i != last {
            self.grid
                .relabel(last as u32, i as u32, &self.coords[last * d..(last + 1) * d]);
            let (head, tail) = self.coords.split_at_mut(last * d);
            head[i * d..(i + 1) * d].copy_from_slice(&tail[..d]);
        }
        self.coords.truncate(last * d);
    }
}

/// Birth–death Metropolis–Hastings chain with free boundary. See [`sample_mh_with`].
pub fn sample_mh(
    model: &PairwiseModel,
    window: &Window,
    steps: u64,
    rng: RngSeed,
) -> Result<PointPattern> {
    sample_mh_with(model, window, steps, rng, Boundary::Free)
}

/// Runs `steps` birth–death Metropolis–Hastings proposals from the empty configuration
/// and returns the final state.
///
/// Each step proposes, with probability one half, a birth at a uniform location `u`
/// (accepted with probability `min(1, lambda(u|x) |W| / (n + 1))`) or the death of a
/// uniformly chosen point (accepted with probability `min(1, n / (lambda(x_i|x - x_i) |W|))`).
pub fn sample_mh_with(
    model: &PairwiseModel,
    window: &Window,
    steps: u64,
    rng: RngSeed,
    boundary: Boundary,
) -> Result<PointPattern> {
    check_model_window(model, window)?;
    let mut rng = rng.rng();
    let dim = window.dim();
    let beta_vol = model.beta() * window.volume();
    let mut state = Configuration {
        dim,
        coords: Vec::new(),
        grid: interaction_grid(model, window, boundary),
        interaction: model.interaction(),
        range: model.range(),
        trivial: model.interaction().is_trivial(),
    };
    let mut proposal = Vec::with_capacity(dim);
    for _ in 0..steps {
        let n = state.len();
        if rng.random::<bool>() {
            proposal.clear();
            uniform_point(&mut rng, window, &mut proposal);
            let ratio = beta_vol / (n as f64 + 1.0);
            let u: f64 = rng.random();
            // The product only matters when the acceptance test could fail.
            if u < ratio && u < ratio * state.interaction_product(&proposal, None) {
                state.push(&proposal);
            }
        } else if n > 0 {
            let i = rng.random_range(0..n);
            let u: f64 = rng.random();
            let x = &state.coords[i * dim..(i + 1) * dim];
            let lambda_vol = beta_vol * state.interaction_product(x, Some(i as u32));
            if u * lambda_vol < n as f64 {
                state.swap_remove(i);
            }
        }
    }
    Ok(PointPattern::from_flat_unchecked(window.clone(), state.coords))
}

/// Options for dominated coupling from the past.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DcftpOptions {
    /// Give up once this many dominating events have been generated.
    pub max_events: u64,
    pub boundary: Boundary,
}

impl Default for DcftpOptions {
    fn default() -> Self {
        Self {
            max_events: DEFAULT_MAX_EVENTS,
            boundary: Boundary::Free,
        }
    }
}

/// Perfect draw with the default event cap and free boundary.
pub fn sample_dcftp(model: &PairwiseModel, window: &Window, rng: RngSeed) -> Result<PointPattern> {
    sample_dcftp_with(model, window, rng, DcftpOptions::default())
}

/// Forward-time meaning of a dominating-process event.
#[derive(Debug, Clone, Copy)]
enum Event {
    Birth(u32),
    Death(u32),
}

/// Dominating birth–death process (births at rate `beta |W|`, unit deaths), generated
/// backwards in time from its stationary Poisson state at time 0.
struct Dominating {
    dim: usize,
    coords: Vec<f64>,
    marks: Vec<f64>,
    /// Events in the order they were generated, i.e. latest forward time first.
    events: Vec<Event>,
    /// Points alive at the current backward horizon.
    alive: Vec<u32>,
    horizon: f64,
}

impl Dominating {
    fn new(rng: &mut ChaCha8Rng, window: &Window, beta: f64) -> Self {
        let n = poisson_count(rng, beta * window.volume());
        let mut dom = Dominating {
            dim: window.dim(),
            coords: Vec::with_capacity(n as usize * window.dim()),
            marks: Vec::with_capacity(n as usize),
            events: Vec::new(),
            alive: Vec::with_capacity(n as usize),
            horizon: 0.0,
        };
        for _ in 0..n {
            let id = dom.new_point(rng, window);
            dom.alive.push(id);
        }
        dom
    }

    fn new_point(&mut self, rng: &mut ChaCha8Rng, window: &Window) -> u32 {
        let id = self.marks.len() as u32;
        uniform_point(rng, window, &mut self.coords);
        self.marks.push(rng.random());
        id
    }

    fn point(&self, id: u32) -> &[f64] {
        let i = id as usize * self.dim;
        &self.coords[i..i + self.dim]
    }

    /// Extends the event record back to `-target`. The reversed process has the same
    /// law, so a reversed birth is a forward death and vice versa.
    fn extend_to(
        &mut self,
        rng: &mut ChaCha8Rng,
        window: &Window,
        beta: f64,
        target: f64,
        max_events: u64,
    ) -> std::result::Result<(), u64> {
        let birth_rate = beta * window.volume();
        let mut t = self.horizon;
        loop {
            let n = self.alive.len() as f64;
            let total = birth_rate + n;
            if total <= 0.0 {
                break;
            }
            t += exp1(rng) / total;
            if t > target {
                break;
            }
            if self.events.len() as u64 >= max_events {
                return Err(self.events.len() as u64);
            }
            if rng.random::<f64>() * total < birth_rate {
                let id = self.new_point(rng, window);
                self.alive.push(id);
                self.events.push(Event::Death(id));
            } else {
                let k = rng.random_range(0..self.alive.len());
                let id = self.alive.swap_remove(k);
                self.events.push(Event::Birth(id));
            }
        }
        self.horizon = target;
        Ok(())
    }
}

/// Result of one forward sandwich pass.
struct Sandwich {
    in_lower: Vec<bool>,
    upper_len: usize,
    lower_len: usize,
}

/// Runs the upper and lower processes forward from the current horizon to time 0.
/// Upper starts from the dominating state, lower from empty. For inhibitory `phi`
/// the upper process accepts a birth whenever any sandwiched state could, and the
/// lower process only when all could.
fn sandwich_pass(dom: &Dominating, model: &PairwiseModel, grid: &mut GridIndex) -> Sandwich {
    let interaction = model.interaction();
    let trivial = interaction.is_trivial();
    let range = model.range();
    let total = dom.marks.len();
    let mut in_upper = vec![false; total];
    let mut in_lower = vec![false; total];
    grid.clear();
    for &id in &dom.alive {
        in_upper[id as usize] = true;
        grid.insert(id, dom.point(id));
    }
    let mut upper_len = dom.alive.len();
    let mut lower_len = 0usize;
    for ev in dom.events.iter().rev() {
        match *ev {
            Event::Birth(id) => {
                let x = dom.point(id);
                let (mut prod_upper, mut prod_lower) = (1.0, 1.0);
                if !trivial {
                    grid.for_each_within(x, range, &dom.coords, |j, d2| {
                        let p = interaction.phi_sq(d2);
                        prod_upper *= p;
                        if in_lower[j as usize] {
                            prod_lower *= p;
                        }
                    });
                }
                let mark = dom.marks[id as usize];
                if mark <= prod_lower {
                    in_upper[id as usize] = true;
                    upper_len += 1;
                    grid.insert(id, x);
                    if mark <= prod_upper {
                        in_lower[id as usize] = true;
                        lower_len += 1;
                    }
                }
            }
            Event::Death(id) => {
                let i = id as usize;
                if in_upper[i] {
                    grid.remove(id, dom.point(id));
                    in_upper[i] = false;
                    upper_len -= 1;
                }
                if in_lower[i] {
                    in_lower[i] = false;
                    lower_len -= 1;
                }
            }
        }
    }
    Sandwich {
        in_lower,
        upper_len,
        lower_len,
    }
}

/// Exact draw by dominated coupling from the past.
///
/// The dominating process is a spatial birth–death process with birth rate `beta` per
/// unit volume and unit death rate, whose stationary law is Poisson(`beta`). It is
/// generated backwards from time 0 and its events are reused as the horizon doubles
/// through `T = 1, 2, 4, ...` until the upper and lower processes agree at time 0.
pub fn sample_dcftp_with(
    model: &PairwiseModel,
    window: &Window,
    rng: RngSeed,
    opts: DcftpOptions,
) -> Result<PointPattern> {
    check_model_window(model, window)?;
    let mut rng = rng.rng();
    let beta = model.beta();
    let mut dom = Dominating::new(&mut rng, window, beta);
    let mut grid = interaction_grid(model, window, opts.boundary);
    let mut target = 1.0;
    loop {
        if let Err(events) = dom.extend_to(&mut rng, window, beta, target, opts.max_events) {
            let s = sandwich_pass(&dom, model, &mut grid);
            return Err(Error::NonConvergence {
                events,
                cap: opts.max_events,
                horizon: target,
                upper: s.upper_len,
                lower: s.lower_len,
            });
        }
        let s = sandwich_pass(&dom, model, &mut grid);
        if s.upper_len == s.lower_len {
            let mut coords = Vec::with_capacity(s.lower_len * dom.dim);
            for (id, _) in s.in_lower.iter().enumerate().filter(|(_, &b)| b) {
                coords.extend_from_slice(dom.point(id as u32));
            }
            return Ok(PointPattern::from_flat_unchecked(window.clone(), coords));
        }
        target *= 2.0;
    }
}

/// Counts of the immigration–death process on a region of volume `region_volume`
/// (immigration rate `nu` per unit volume, unit per-capita death rate) at each of the
/// nondecreasing `times`, starting from `initial_count` points at time 0.
pub fn sample_immigration_death(
    region_volume: f64,
    nu: f64,
    initial_count: u64,
    times: &[f64],
    rng: RngSeed,
) -> Result<Vec<u64>> {
    if !(region_volume.is_finite() && region_volume > 0.0) {
        return Err(Error::Domain(format!(
            "region volume must be positive, got {region_volume}"
        )));
    }
    if !(nu.is_finite() && nu > 0.0) {
        return Err(Error::Domain(format!(
            "immigration rate must be positive, got {nu}"
        )));
    }
    let mut prev = 0.0;
    for &t in times {
        if !(t.is_finite() && t >= prev) {
            return Err(Error::Domain(
                "times must be finite, nonnegative and nondecreasing".into(),
            ));
        }
        prev = t;
    }
    let mut rng = rng.rng();
    let immigration = nu * region_volume;
    let mut n = initial_count;
    let mut next = exp1(&mut rng) / (immigration + n as f64);
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        while next <= t {
            let total = immigration + n as f64;
            if rng.random::<f64>() * total < immigration {
                n += 1;
            } else {
                n -= 1;
            }
            next += exp1(&mut rng) / (immigration + n as f64);
        }
        out.push(n);
    }
    Ok(out)
}

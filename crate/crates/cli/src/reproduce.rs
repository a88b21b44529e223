//! Tables behind the four figures.
//!
//! | figure | content | fast budget | full budget |
//! |---|---|---|---|
//! | 1 | Strauss `beta = 50`, `r = 0.05`, intensity vs `gamma` | 500 MH runs of 10^5 steps | 10,000 dCFTP draws |
//! | 2 | as figure 1 with `beta = 100` | 500 MH runs of 10^5 steps | 10,000 dCFTP draws |
//! | 3 | hard annulus vs hard core, `beta = 3000` | 10 MH runs of 10^7 steps | 300 runs |
//! | 4 | G band (hard annulus) and K band (hard core) | 200 dCFTP draws | 1,000 draws |
//!
//! Fast budgets inflate standard errors by roughly `sqrt(full / fast)`: about 4.5x for
//! figures 1 and 2, 5.5x for figure 3 and 2.2x for figure 4.

use std::f64::consts::PI;

use gibbs_bounds::bounds::{intensity_summary, CurveBand};
use gibbs_bounds::estimate::{
    run_replicates, simulation_window, ReplicateOptions, ReplicateSummary, Statistic, Summary,
};
use gibbs_bounds::io::{write_band_csv, write_pattern_csv};
use gibbs_bounds::model::{PairwiseModel, RadialStepInteraction, Window};
use gibbs_bounds::rng::RngSeed;
use gibbs_bounds::simulate::Sampler;
use gibbs_bounds::Error;
use rayon::prelude::*;

use crate::commands::curve_band;
use crate::config::StatisticKind;
use crate::{Artifact, CliError};

pub const DEFAULT_SEED: u64 = 1;

/// Replicate budgets per figure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Budget {
    pub sweep_replicates: usize,
    pub sweep_sampler: Sampler,
    pub example_runs: usize,
    pub example_steps: u64,
    pub curve_replicates: usize,
}

impl Budget {
    pub fn new(fast: bool) -> Self {
        if fast {
            Self {
                sweep_replicates: 500,
                sweep_sampler: Sampler::Mh { steps: 100_000 },
                example_runs: 10,
                example_steps: 10_000_000,
                curve_replicates: 200,
            }
        } else {
            Self {
                sweep_replicates: 10_000,
                sweep_sampler: Sampler::dcftp(),
                example_runs: 300,
                example_steps: 10_000_000,
                curve_replicates: 1_000,
            }
        }
    }
}

pub fn cmd_reproduce(figure: u8, budget: &Budget, seed: u64) -> Result<Vec<Artifact>, CliError> {
    match figure {
        1 => Ok(vec![gamma_sweep("figure1_intensity.csv", 50.0, budget, seed)?]),
        2 => Ok(vec![gamma_sweep("figure2_intensity.csv", 100.0, budget, seed)?]),
        3 => figure3(budget, seed),
        4 => figure4(budget, seed),
        other => Err(CliError::Usage(format!("there is no figure {other}"))),
    }
}

fn strauss(beta: f64, gamma: f64, r: f64) -> Result<PairwiseModel, Error> {
    PairwiseModel::new(2, beta, RadialStepInteraction::strauss(gamma, r)?)
}

fn csv_writer() -> csv::Writer<Vec<u8>> {
    csv::Writer::from_writer(Vec::new())
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<Vec<u8>, CliError> {
    w.into_inner()
        .map_err(|e| CliError::Core(Error::Io(e.into_error())))
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Intensity bounds and replicate estimates for Strauss processes with
/// `r = 0.05` and `gamma = 0, 0.1, ..., 1`.
fn gamma_sweep(name: &str, beta: f64, budget: &Budget, seed: u64) -> Result<Artifact, CliError> {
    let inner = Window::unit_cube(2);
    let mut w = csv_writer();
    w.write_record([
        "gamma", "lower", "lambda_ps", "lambda_mf", "upper", "estimate", "std_err", "n_replicates",
    ])
    .map_err(Error::from)?;
    for k in 0..=10u64 {
        let gamma = k as f64 / 10.0;
        let model = strauss(beta, gamma, 0.05)?;
        let b = intensity_summary(&model);
        let s = run_replicates(
            &model,
            &inner,
            budget.sweep_sampler,
            budget.sweep_replicates,
            &Statistic::Intensity,
            RngSeed::new(seed, k),
        )?;
        let s = s.scalar().expect("intensity is scalar");
        w.write_record([
            gamma.to_string(),
            b.lower.to_string(),
            b.lambda_ps.to_string(),
            b.lambda_mf.to_string(),
            b.upper.to_string(),
            s.mean.to_string(),
            opt(s.std_err),
            s.n_replicates.to_string(),
        ])
        .map_err(Error::from)?;
    }
    Ok(Artifact::new(name, finish(w)?))
}

/// Hard annulus (`r = 0.05`, `R = sqrt(2) r`) and hard core (`r = 0.05`) with
/// `beta = 3000`: both have the same `beta` and `G`. Writes one example pattern per
/// process, restricted to the unit square, and a summary table.
fn figure3(budget: &Budget, seed: u64) -> Result<Vec<Artifact>, CliError> {
    let r = 0.05;
    let processes = [
        ("hard_annulus", RadialStepInteraction::hard_annulus(r, 2f64.sqrt() * r)?),
        ("hard_core", RadialStepInteraction::hard_core(r)?),
    ];
    let inner = Window::unit_cube(2);
    let mut artifacts = Vec::new();
    let mut w = csv_writer();
    w.write_record([
        "process", "runs", "steps", "estimate", "std_err", "lower", "lambda_ps", "lambda_mf", "upper",
        "example_points",
    ])
    .map_err(Error::from)?;
    for (k, (name, interaction)) in processes.into_iter().enumerate() {
        let model = PairwiseModel::new(2, 3000.0, interaction)?;
        let (window, boundary) =
            simulation_window(&model, &inner, &Statistic::Intensity, ReplicateOptions::default());
        let sampler = Sampler::Mh {
            steps: budget.example_steps,
        };
        let base = RngSeed::new(seed, k as u64);
        let patterns: Vec<_> = (0..budget.example_runs)
            .into_par_iter()
            .map(|i| sampler.sample(&model, &window, base.child(i as u64), boundary))
            .collect();
        let mut counts = Vec::with_capacity(patterns.len());
        let mut example = None;
        for (index, p) in patterns.into_iter().enumerate() {
            let p = p.map_err(|e| Error::Replicate {
                index,
                source: Box::new(e),
            })?;
            counts.push(p.count_in(&inner) as f64 / inner.volume());
            if example.is_none() {
                example = Some(p.restrict(&inner));
            }
        }
        let s = ReplicateSummary::from_values(counts)?;
        let example = example.expect("at least one run");
        let b = intensity_summary(&model);
        w.write_record([
            name.to_string(),
            budget.example_runs.to_string(),
            budget.example_steps.to_string(),
            s.mean.to_string(),
            opt(s.std_err),
            b.lower.to_string(),
            b.lambda_ps.to_string(),
            b.lambda_mf.to_string(),
            b.upper.to_string(),
            example.len().to_string(),
        ])
        .map_err(Error::from)?;
        let mut csv = Vec::new();
        write_pattern_csv(&example, &mut csv)?;
        artifacts.push(Artifact::new(format!("figure3_{name}_pattern.csv"), csv));
    }
    artifacts.insert(0, Artifact::new("figure3_summary.csv", finish(w)?));
    Ok(artifacts)
}

/// Grid shared by both panels of figure 4.
pub fn figure4_grid() -> Vec<f64> {
    (0..=20).map(|i| i as f64 * 0.005).collect()
}

/// Left: G of the hard annulus `beta = 70`, `r = 0.025`, `R = 0.035`. Right: K of the
/// hard core `beta = 40`, `r = 0.05`. Each band CSV carries the dCFTP estimate; a
/// third table gives the Poisson reference curves.
fn figure4(budget: &Budget, seed: u64) -> Result<Vec<Artifact>, CliError> {
    let t = figure4_grid();
    let inner = Window::unit_cube(2);
    let sampler = Sampler::dcftp();
    let panels = [
        (
            "figure4_left_G.csv",
            PairwiseModel::new(2, 70.0, RadialStepInteraction::hard_annulus(0.025, 0.035)?)?,
            StatisticKind::G,
            Statistic::G(t.clone()),
        ),
        (
            "figure4_right_K.csv",
            PairwiseModel::new(2, 40.0, RadialStepInteraction::hard_core(0.05)?)?,
            StatisticKind::K,
            Statistic::K(t.clone()),
        ),
    ];
    let mut artifacts = Vec::new();
    let mut left_intensity = f64::NAN;
    for (k, (name, model, kind, stat)) in panels.into_iter().enumerate() {
        let rng = RngSeed::new(seed, k as u64);
        let summary = run_replicates(&model, &inner, sampler, budget.curve_replicates, &stat, rng)?;
        let c = match summary {
            Summary::Curve(c) => c,
            Summary::Scalar(_) => unreachable!("curve statistic"),
        };
        if kind == StatisticKind::G {
            // the same seed redraws the same patterns
            let s = run_replicates(&model, &inner, sampler, budget.curve_replicates, &Statistic::Intensity, rng)?;
            left_intensity = s.scalar().expect("scalar").mean;
        }
        let band: CurveBand = curve_band(&model, kind, &t)?.with_estimate(c.estimate, c.std_err)?;
        let mut bytes = Vec::new();
        write_band_csv(&mut bytes, &band)?;
        artifacts.push(Artifact::new(name, bytes));
    }
    let mut w = csv_writer();
    w.write_record(["t", "G_poisson", "K_poisson"]).map_err(Error::from)?;
    for &ti in &t {
        let g = 1.0 - (-left_intensity * PI * ti * ti).exp();
        w.write_record([ti.to_string(), g.to_string(), (PI * ti * ti).to_string()])
            .map_err(Error::from)?;
    }
    artifacts.push(Artifact::new("figure4_poisson.csv", finish(w)?));
    Ok(artifacts)
}

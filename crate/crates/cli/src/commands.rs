//! The `bounds`, `simulate` and `estimate` commands.

use std::path::Path;

use gibbs_bounds::bounds::{
    f_bounds, g_bounds, intensity_bounds, intensity_summary, k_bounds, pcf_bounds, CurveBand,
    IntensitySummary,
};
use gibbs_bounds::estimate::{
    run_replicates, simulation_window, summarize_pattern, CurveSummary, EdgeCorrection,
    ReplicateOptions, Statistic, Summary,
};
use gibbs_bounds::io::{load_pattern, write_band_csv, write_curve_csv, write_pattern_csv, PatternMeta};
use gibbs_bounds::model::{integral_g, PairwiseModel};
use gibbs_bounds::rng::RngSeed;
use gibbs_bounds::Error;
use serde::Serialize;

use crate::config::{ExperimentConfig, SamplerKind, StatisticKind};
use crate::{Artifact, CliError};

/// Bound band for a curve statistic, with the intensity bracketed analytically.
pub fn curve_band(model: &PairwiseModel, stat: StatisticKind, t: &[f64]) -> Result<CurveBand, Error> {
    let lambda = intensity_bounds(model.beta(), integral_g(model));
    match stat {
        StatisticKind::F => f_bounds(lambda, model.c_star(), model.dim(), t),
        StatisticKind::G => g_bounds(model, lambda, t),
        StatisticKind::K => k_bounds(model, lambda, t),
        StatisticKind::Pcf => pcf_bounds(model, lambda, t),
        StatisticKind::Intensity => unreachable!("intensity has no curve band"),
    }
}

fn json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>, CliError> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(Error::from)?;
    bytes.push(b'\n');
    Ok(bytes)
}

fn band_bytes(band: &CurveBand) -> Result<Vec<u8>, CliError> {
    let mut bytes = Vec::new();
    write_band_csv(&mut bytes, band)?;
    Ok(bytes)
}

pub fn curve_bytes(c: &CurveSummary) -> Result<Vec<u8>, CliError> {
    let mut bytes = Vec::new();
    write_curve_csv(&mut bytes, &c.abscissae, &c.estimate, &c.std_err)?;
    Ok(bytes)
}

/// `{lower, lambda_ps, lambda_mf, upper}` for intensity, a band CSV otherwise.
pub fn cmd_bounds(cfg: &ExperimentConfig) -> Result<Vec<Artifact>, CliError> {
    let model = cfg.model()?;
    if cfg.statistic == StatisticKind::Intensity {
        let s: IntensitySummary = intensity_summary(&model);
        return Ok(vec![Artifact::new("bounds.json", json_bytes(&s)?)]);
    }
    let band = curve_band(&model, cfg.statistic, &cfg.grid())?;
    Ok(vec![Artifact::new(
        format!("bounds_{}.csv", cfg.statistic.name()),
        band_bytes(&band)?,
    )])
}

/// Statistic that sets the simulation buffer; pcf shares K's reach.
fn buffer_statistic(cfg: &ExperimentConfig) -> Statistic {
    match cfg.statistic {
        StatisticKind::Intensity => Statistic::Intensity,
        _ => Statistic::K(cfg.grid()),
    }
}

fn sampler_name(kind: SamplerKind) -> &'static str {
    match kind {
        SamplerKind::Mh => "mh",
        SamplerKind::Dcftp => "dcftp",
        SamplerKind::Poisson => "poisson",
    }
}

/// Seed of the pattern `simulate` draws; it is replicate 0 of `estimate`'s run.
pub fn pattern_seed(cfg: &ExperimentConfig) -> RngSeed {
    RngSeed::new(cfg.seed, 0).child(0)
}

/// Draws one pattern on the buffered window and returns `pattern.csv` and its sidecar.
pub fn cmd_simulate(cfg: &ExperimentConfig) -> Result<Vec<Artifact>, CliError> {
    let model = cfg.model()?;
    let (window, boundary) = simulation_window(
        &model,
        &cfg.window,
        &buffer_statistic(cfg),
        ReplicateOptions::default(),
    );
    let seed = pattern_seed(cfg);
    let pattern = cfg.sampler().sample(&model, &window, seed, boundary)?;
    let mut csv = Vec::new();
    write_pattern_csv(&pattern, &mut csv)?;
    let meta = PatternMeta {
        window,
        inner: Some(cfg.window.clone()),
        model: cfg.model.clone(),
        seed,
        steps: (cfg.sampler == SamplerKind::Mh).then_some(cfg.steps),
        sampler: sampler_name(cfg.sampler).into(),
    };
    Ok(vec![
        Artifact::new("pattern.csv", csv),
        Artifact::new("pattern.json", json_bytes(&meta)?),
    ])
}

#[derive(Serialize)]
struct IntensityEstimate {
    estimate: f64,
    std_err: Option<f64>,
    n_replicates: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    bounds: Option<IntensitySummary>,
}

/// Estimates from the saved pattern when given, otherwise from fresh replicates joined
/// with the bound band.
pub fn cmd_estimate(cfg: &ExperimentConfig, pattern: Option<&Path>) -> Result<Vec<Artifact>, CliError> {
    let statistic = cfg.estimator()?;
    let model = cfg.model()?;
    let name = cfg.statistic.name();
    match pattern {
        Some(path) => {
            let (pattern, meta) = load_pattern(path)?;
            let inner = meta.inner.unwrap_or_else(|| cfg.window.clone());
            let summary = summarize_pattern(&pattern, &inner, &statistic, EdgeCorrection::Border)?;
            match summary {
                Summary::Scalar(s) => Ok(vec![Artifact::new(
                    "estimate_intensity.json",
                    json_bytes(&IntensityEstimate {
                        estimate: s.mean,
                        std_err: s.std_err,
                        n_replicates: s.n_replicates,
                        bounds: None,
                    })?,
                )]),
                Summary::Curve(c) => Ok(vec![Artifact::new(format!("estimate_{name}.csv"), curve_bytes(&c)?)]),
            }
        }
        None => {
            let summary = run_replicates(
                &model,
                &cfg.window,
                cfg.sampler(),
                cfg.n_replicates,
                &statistic,
                RngSeed::new(cfg.seed, 0),
            )?;
            match summary {
                Summary::Scalar(s) => Ok(vec![Artifact::new(
                    "estimate_intensity.json",
                    json_bytes(&IntensityEstimate {
                        estimate: s.mean,
                        std_err: s.std_err,
                        n_replicates: s.n_replicates,
                        bounds: Some(intensity_summary(&model)),
                    })?,
                )]),
                Summary::Curve(c) => {
                    let band = curve_band(&model, cfg.statistic, &c.abscissae)?
                        .with_estimate(c.estimate.clone(), c.std_err.clone())?;
                    Ok(vec![Artifact::new(format!("estimate_{name}.csv"), band_bytes(&band)?)])
                }
            }
        }
    }
}

use std::path::Path;
use std::process::Command;

use gibbs_bounds::bounds::intensity_summary;
use gibbs_bounds::estimate::run_replicates;
use gibbs_bounds::rng::RngSeed;
use gibbs_bounds::simulate::Sampler;
use gibbs_bounds_cli::commands::{cmd_bounds, cmd_estimate, cmd_simulate, curve_bytes};
use gibbs_bounds_cli::config::ExperimentConfig;
use gibbs_bounds_cli::reproduce::{cmd_reproduce, Budget};
use gibbs_bounds_cli::{deliver, CliError};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gibbs-bounds"))
}

fn write_config(dir: &Path, name: &str, json: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, json).unwrap();
    p
}

fn strauss_config(gamma: f64, statistic: &str, sampler: &str) -> String {
    format!(
        r#"{{
        "model": {{"d": 2, "beta": 60, "interaction": {{"type": "strauss", "params": {{"gamma": {gamma}, "r": 0.05}}}}}},
        "window": {{"lower": [0, 0], "upper": [1, 1]}},
        "sampler": "{sampler}",
        "steps": 20000,
        "n_replicates": 1,
        "seed": 42,
        "t_grid": {{"min": 0, "max": 0.08, "count": 9}},
        "statistic": "{statistic}"
    }}"#
    )
}

const HARD_ANNULUS: &str = r#"{
    "model": {"d": 2, "beta": 3000, "interaction": {"type": "hard_annulus", "params": {"r": 0.05, "R": 0.07071067811865477}}},
    "window": {"lower": [0, 0], "upper": [1, 1]}
}"#;

#[test]
fn bounds_for_hard_annulus_model() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", HARD_ANNULUS);
    let out = bin().args(["bounds", "--config"]).arg(&cfg).output().unwrap();
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(format!("{:.1}", v["lower"].as_f64().unwrap()), "122.1");
    assert_eq!(format!("{:.1}", v["lambda_ps"].as_f64().unwrap()), "295.2");
    assert_eq!(v["lambda_mf"].as_f64().unwrap(), 0.0);
    assert_eq!(format!("{:.0}", v["upper"].as_f64().unwrap()), "1500");
}

#[test]
fn poisson_case_bounds_all_equal_beta() {
    let cfg = ExperimentConfig::from_json(&strauss_config(1.0, "intensity", "mh")).unwrap();
    let out = cmd_bounds(&cfg).unwrap();
    let v: serde_json::Value = serde_json::from_slice(&out[0].bytes).unwrap();
    for k in ["lower", "lambda_ps", "lambda_mf", "upper"] {
        assert_eq!(v[k].as_f64().unwrap(), 60.0, "{k}");
    }
}

#[test]
fn curve_bounds_are_band_csv() {
    let cfg = ExperimentConfig::from_json(&strauss_config(0.5, "K", "mh")).unwrap();
    let out = cmd_bounds(&cfg).unwrap();
    assert_eq!(out[0].name, "bounds_K.csv");
    let text = out[0].text();
    assert!(text.starts_with("t,lower,upper,estimate,std_err\n"));
    assert_eq!(text.lines().count(), 10);
}

#[test]
fn non_inhibitory_model_exits_with_code_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        r#"{"model": {"d": 2, "beta": 10, "interaction": {"type": "step", "params": {"breakpoints": [0.1], "values": [1.5]}}},
            "window": {"lower": [0, 0], "upper": [1, 1]}}"#,
    );
    let out = bin().args(["bounds", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("inhibition hypothesis violated"));
}

#[test]
fn usage_errors_exit_with_code_1() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write_config(dir.path(), "bad.json", "{\"model\": 3,\n \"window\": {}}");
    let out = bin().args(["bounds", "--config"]).arg(&bad).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line"));

    assert_eq!(bin().arg("bounds").output().unwrap().status.code(), Some(1));
    assert_eq!(bin().args(["reproduce", "--figure", "5"]).output().unwrap().status.code(), Some(1));
    assert_eq!(bin().arg("frobnicate").output().unwrap().status.code(), Some(1));
    assert_eq!(bin().arg("--help").output().unwrap().status.code(), Some(0));
}

#[test]
fn dcftp_non_convergence_exits_with_code_3() {
    let dir = tempfile::tempdir().unwrap();
    let json = strauss_config(0.0, "intensity", "dcftp").replace("\"seed\": 42,", "\"seed\": 42, \"max_events\": 5,");
    let cfg = write_config(dir.path(), "c.json", &json);
    let out = bin()
        .args(["simulate", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path().join("o"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("did not coalesce"));
}

#[test]
fn pcf_has_no_estimator() {
    let cfg = ExperimentConfig::from_json(&strauss_config(0.5, "pcf", "mh")).unwrap();
    assert!(cmd_bounds(&cfg).is_ok());
    assert!(matches!(cmd_estimate(&cfg, None), Err(CliError::Usage(_))));
}

/// Simulating to disk and estimating from the file matches the in-process pipeline.
#[test]
fn simulate_then_estimate_round_trip() {
    for (stat, sampler) in [("K", "mh"), ("G", "dcftp"), ("F", "mh"), ("intensity", "dcftp")] {
        let cfg = ExperimentConfig::from_json(&strauss_config(0.3, stat, sampler)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        deliver(&cmd_simulate(&cfg).unwrap(), Some(dir.path())).unwrap();
        let from_file = cmd_estimate(&cfg, Some(&dir.path().join("pattern.csv"))).unwrap();

        let model = cfg.model().unwrap();
        let summary = run_replicates(&model, &cfg.window, cfg.sampler(), 1, &cfg.estimator().unwrap(), RngSeed::new(cfg.seed, 0))
            .unwrap();
        match summary.curve() {
            Some(c) => assert_eq!(from_file[0].bytes, curve_bytes(c).unwrap(), "{stat}"),
            None => {
                let v: serde_json::Value = serde_json::from_slice(&from_file[0].bytes).unwrap();
                assert_eq!(v["estimate"].as_f64().unwrap(), summary.scalar().unwrap().mean);
            }
        }
    }
}

#[test]
fn binary_round_trip_and_thread_independence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", &strauss_config(0.3, "K", "mh"));
    for threads in ["1", "3"] {
        let sim = dir.path().join(format!("sim{threads}"));
        let status = bin()
            .args(["simulate", "--threads", threads, "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(&sim)
            .status()
            .unwrap();
        assert!(status.success());
        let out = bin()
            .args(["estimate", "--config"])
            .arg(&cfg)
            .arg("--pattern")
            .arg(sim.join("pattern.csv"))
            .output()
            .unwrap();
        assert!(out.status.success());
        assert!(String::from_utf8_lossy(&out.stdout).starts_with("t,estimate,std_err\n"));
    }
    let a = std::fs::read(dir.path().join("sim1/pattern.csv")).unwrap();
    let b = std::fs::read(dir.path().join("sim3/pattern.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn replicate_estimate_is_joined_with_band() {
    let json = strauss_config(0.3, "G", "dcftp").replace("\"n_replicates\": 1", "\"n_replicates\": 20");
    let cfg = ExperimentConfig::from_json(&json).unwrap();
    let out = cmd_estimate(&cfg, None).unwrap();
    let text = out[0].text();
    assert!(text.starts_with("t,lower,upper,estimate,std_err\n"));
    let last = text.lines().last().unwrap();
    assert_eq!(last.split(',').count(), 5);
    assert!(last.split(',').all(|f| !f.is_empty()));
}

fn tiny_budget() -> Budget {
    Budget {
        sweep_replicates: 3,
        sweep_sampler: Sampler::Mh { steps: 2_000 },
        example_runs: 2,
        example_steps: 20_000,
        curve_replicates: 3,
    }
}

#[test]
fn figure1_bound_columns_match_library() {
    let out = cmd_reproduce(1, &tiny_budget(), 7).unwrap();
    let mut r = csv::Reader::from_reader(out[0].bytes.as_slice());
    let rows: Vec<csv::StringRecord> = r.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 11);
    for row in rows {
        let gamma = &row[0];
        let cfg = ExperimentConfig::from_json(&format!(
            r#"{{"model": {{"d": 2, "beta": 50, "interaction": {{"type": "strauss", "params": {{"gamma": {gamma}, "r": 0.05}}}}}},
                "window": {{"lower": [0, 0], "upper": [1, 1]}}}}"#
        ))
        .unwrap();
        let b = intensity_summary(&cfg.model().unwrap());
        for (i, v) in [b.lower, b.lambda_ps, b.lambda_mf, b.upper].into_iter().enumerate() {
            assert_eq!(row[i + 1].parse::<f64>().unwrap(), v, "gamma={gamma} column {}", i + 1);
        }
    }
}

#[test]
fn figure3_and_4_emit_their_tables() {
    let out = cmd_reproduce(3, &tiny_budget(), 7).unwrap();
    let names: Vec<&str> = out.iter().map(|a| a.name.as_str()).collect();
    assert_eq!(
        names,
        ["figure3_summary.csv", "figure3_hard_annulus_pattern.csv", "figure3_hard_core_pattern.csv"]
    );
    assert_eq!(out[0].text().lines().count(), 3);
    assert!(out[1].text().starts_with("x1,x2\n"));

    let out = cmd_reproduce(4, &tiny_budget(), 7).unwrap();
    let names: Vec<&str> = out.iter().map(|a| a.name.as_str()).collect();
    assert_eq!(names, ["figure4_left_G.csv", "figure4_right_K.csv", "figure4_poisson.csv"]);
    for a in &out[..2] {
        assert!(a.text().starts_with("t,lower,upper,estimate,std_err\n"));
        assert_eq!(a.text().lines().count(), 22);
    }
}

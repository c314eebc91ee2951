use std::path::Path;

use ht_bnp::harness::{parse_config, run, RunManifest, RunOptions, RunStatus, RunSummary, MANIFEST_FILE};
use ht_bnp::io::Table;

fn run_in(dir: &Path, text: &str) -> RunSummary {
    let cfg = parse_config(text).unwrap();
    run(
        &cfg,
        &RunOptions {
            out: Some(dir.to_path_buf()),
            ..RunOptions::default()
        },
    )
    .unwrap()
}

fn header(summary: &RunSummary, rel: &str) -> (String, Vec<String>) {
    let t = Table::read(&summary.dir.join(rel)).unwrap();
    (t.schema, t.columns)
}

#[test]
fn dj94_rescales_to_target_snr() {
    let tmp = tempfile::tempdir().unwrap();
    let s = run_in(
        tmp.path(),
        r#"
experiment = "dj94_denoise"
seed = 3

[dj94]
signals = ["bumps", "doppler"]

[[priors]]
family = "series"
scale = { kind = "ot", a = 1.0, delta = 0.5 }
tail = { kind = "cauchy" }

[sampler]
n_draws = 400
burn_in = 200
"#,
    );
    let m = RunManifest::read(&s.dir.join(MANIFEST_FILE)).unwrap();
    assert_eq!(m.status, RunStatus::Complete);
    for signal in ["bumps", "doppler"] {
        let snr = m.extra["snr"][signal].as_f64().unwrap();
        assert!((snr - 7.0).abs() < 0.01, "{signal}: {snr}");
    }
    let (schema, cols) = header(&s, "dj94_errors.csv");
    assert_eq!(schema, "dj94_errors/v1");
    assert_eq!(cols, ["signal", "prior", "l2_error", "reference", "acceptance", "snr"]);
    let (_, cols) = header(&s, "cells/bumps_ot_cauchy/coefficients.csv");
    assert_eq!(cols, ["level", "index", "truth", "x", "mean", "sd", "lo", "hi"]);
    let (_, cols) = header(&s, "observations/bumps.csv");
    assert_eq!(cols, ["level", "index", "kappa", "x"]);
}

#[test]
fn rate_sweep_and_prior_mass_tables() {
    let tmp = tempfile::tempdir().unwrap();
    let s = run_in(
        tmp.path(),
        r#"
experiment = "rate_sweep"
n = [1e2, 1e4, 1e6]
truncation = 200

[rate_sweep]
seeds = 3

[[priors]]
family = "series"
scale = { kind = "ot", a = 1.0, delta = 0.5 }
tail = { kind = "cauchy" }
"#,
    );
    let (schema, cols) = header(&s, "rate_sweep.csv");
    assert_eq!(schema, "rate_sweep/v1");
    assert_eq!(cols, ["series", "n", "error", "se", "x", "mean", "lo", "hi"]);
    let fit: serde_json::Value =
        serde_json::from_slice(&std::fs::read(s.dir.join("rate_slope.json")).unwrap()).unwrap();
    let slope = fit["ot_cauchy"]["slope"].as_f64().unwrap();
    assert!(slope < -0.1, "{fit}");

    let s = run_in(
        tmp.path(),
        r#"
experiment = "prior_mass"
n = [50, 100]
truncation = 50

[[priors]]
family = "series"
scale = { kind = "ot", a = 1.0, delta = 1.0 }
tail = { kind = "cauchy" }

[prior_mass]
n_mc = 2000
"#,
    );
    let t = s
        .manifest
        .outputs
        .keys()
        .find(|k| k.starts_with("prior_mass_") && k.ends_with(".csv"))
        .cloned()
        .unwrap();
    let (schema, cols) = header(&s, &t);
    assert_eq!(schema, "prior_mass/v1");
    assert_eq!(
        cols,
        ["n", "eps_n", "radius", "hits", "n_mc", "p_hat", "ci_lo", "ci_hi", "normalized_log_mass"]
    );
}

#[test]
fn density_and_classification_runs_are_reproducible() {
    for exp in ["density_estimation", "classification"] {
        let text = format!(
            r#"
experiment = "{exp}"
seed = 11
n = [200]
truncation = 5

[[priors]]
family = "series"
scale = {{ kind = "ot", a = 1.0, delta = 1.0 }}
tail = {{ kind = "cauchy" }}

[sampler]
n_draws = 600
burn_in = 300
"#
        );
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let sa = run_in(a.path(), &text);
        let sb = run_in(b.path(), &text);
        assert_eq!(sa.manifest.outputs, sb.manifest.outputs, "{exp}");
        let (schema, cols) = header(&sa, "errors.csv");
        assert_eq!(schema, "errors/v1");
        assert_eq!(cols, ["prior", "n", "rho", "method", "metric", "error", "acceptance"]);
        let e = Table::read(&sa.dir.join("errors.csv")).unwrap();
        assert!(e.text("metric").unwrap().iter().all(|m| m == "l1"));
        assert!(e.numeric("error").unwrap().iter().all(|v| v.is_finite() && *v >= 0.0));
    }
}

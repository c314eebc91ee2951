use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ht_bnp::harness::{RunManifest, RunStatus, MANIFEST_FILE};
use ht_bnp::io::Table;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_ht-bnp"));
    c.env_remove("HT_BNP_THREADS");
    c
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p
}

fn run_cmd(args: &[&str], config: &Path, out: &Path) -> Output {
    bin()
        .args(args)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
}

const SMALL_INVERSE: &str = r#"
experiment = "inverse_regression"
seed = 5
n = [1e3, 1e9]
truncation = 20
forward = "volterra"

[[priors]]
family = "series"
scale = { kind = "ot", a = 1.0, delta = 0.5 }
tail = { kind = "cauchy" }

[sampler]
n_draws = 600
burn_in = 200
"#;

const FIG1_GAUSS: &str = r#"
experiment = "fig1_posterior_means"
seed = 1
n = [1e7]

[fig1]
sigmas = [1e-3, 1e-5]
tails = [{ kind = "gaussian" }]
points = 21
"#;

#[test]
fn shipped_configs_validate() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut count = 0;
    for entry in fs::read_dir(dir).unwrap() {
        let p = entry.unwrap().path();
        if p.extension().is_some_and(|e| e == "toml") {
            let o = bin().arg("validate").arg("--config").arg(&p).output().unwrap();
            assert!(o.status.success(), "{}: {}", p.display(), String::from_utf8_lossy(&o.stderr));
            count += 1;
        }
    }
    assert!(count >= 8);
}

#[test]
fn config_errors_exit_2_with_path() {
    let tmp = tempfile::tempdir().unwrap();
    let cases = [
        ("missing_n.toml", "experiment = \"inverse_regression\"\n[[priors]]\nfamily = \"hierarchical_gaussian\"\n", "`n`"),
        ("unknown.toml", "experiment = \"fig1_posterior_means\"\nn = [1e7]\nbogus = 1\n", "bogus"),
        ("negative.toml", "experiment = \"fig1_posterior_means\"\nn = [-1.0]\n", "n[0]"),
    ];
    for (name, body, needle) in cases {
        let p = write_config(tmp.path(), name, body);
        let o = bin().arg("validate").arg("--config").arg(&p).output().unwrap();
        assert_eq!(o.status.code(), Some(2), "{name}");
        let err = String::from_utf8_lossy(&o.stderr);
        assert!(err.contains(needle), "{name}: {err}");
    }

    // the subcommand must match the configured experiment
    let p = write_config(tmp.path(), "fig1.toml", FIG1_GAUSS);
    let o = run_cmd(&["rate_sweep"], &p, tmp.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("experiment"));

    let o = bin().arg("validate").arg("--config").arg(tmp.path().join("absent.toml")).output().unwrap();
    assert_ne!(o.status.code(), Some(0));

    let o = bin()
        .env("HT_BNP_THREADS", "zero")
        .arg("validate")
        .arg("--config")
        .arg(&p)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn fig1_gaussian_matches_conjugate_line() {
    let tmp = tempfile::tempdir().unwrap();
    let p = write_config(tmp.path(), "fig1.toml", FIG1_GAUSS);
    let o = run_cmd(&["fig1_posterior_means"], &p, tmp.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let t = Table::read(&tmp.path().join("fig1_posterior_means/fig1_posterior_means.csv")).unwrap();
    assert_eq!(t.columns, ["series", "tail", "sigma", "x", "mean", "sd", "lo", "hi", "conjugate"]);
    let mean = t.numeric("mean").unwrap();
    let conj = t.numeric("conjugate").unwrap();
    assert_eq!(mean.len(), 42);
    for (m, c) in mean.iter().zip(&conj) {
        assert!((m - c).abs() < 1e-8, "{m} vs {c}");
    }
}

#[test]
fn manifest_and_byte_identical_reruns() {
    let tmp = tempfile::tempdir().unwrap();
    let p = write_config(tmp.path(), "inv.toml", SMALL_INVERSE);
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    for out in [&a, &b] {
        let o = run_cmd(&["inverse_regression", "--seed", "9"], &p, out);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let ma = RunManifest::read(&a.join("inverse_regression").join(MANIFEST_FILE)).unwrap();
    let mb = RunManifest::read(&b.join("inverse_regression").join(MANIFEST_FILE)).unwrap();
    assert_eq!(ma.status, RunStatus::Complete);
    assert_eq!(ma.seed, 9);
    assert!(ma.outputs.contains_key("errors.csv"));
    assert_eq!(ma.outputs, mb.outputs);
    for rel in ma.outputs.keys() {
        let x = fs::read(a.join("inverse_regression").join(rel)).unwrap();
        let y = fs::read(b.join("inverse_regression").join(rel)).unwrap();
        assert_eq!(x, y, "{rel}");
    }

    let errors = Table::read(&a.join("inverse_regression/errors.csv")).unwrap();
    assert_eq!(errors.columns, ["prior", "n", "rho", "method", "metric", "error", "acceptance"]);
    let methods = errors.text("method").unwrap();
    assert!(methods.iter().any(|m| m.starts_with("mcmc")) && methods.iter().any(|m| m == "quadrature"), "{methods:?}");

    // a different seed changes the data
    let c = tmp.path().join("c");
    assert!(run_cmd(&["inverse_regression", "--seed", "10"], &p, &c).status.success());
    let mc = RunManifest::read(&c.join("inverse_regression").join(MANIFEST_FILE)).unwrap();
    assert_ne!(ma.outputs["errors.csv"], mc.outputs["errors.csv"]);
}

#[test]
fn failed_run_leaves_failed_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    // the DJ94 experiment rejects any wavelet but symmlet8 once it starts
    let p = write_config(
        tmp.path(),
        "dj.toml",
        "experiment = \"dj94_denoise\"\nwavelet = \"daubechies8\"\n[[priors]]\nfamily = \"hierarchical_gaussian\"\n",
    );
    let o = run_cmd(&["dj94_denoise"], &p, tmp.path());
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
    let m = RunManifest::read(&tmp.path().join("dj94_denoise").join(MANIFEST_FILE)).unwrap();
    assert_eq!(m.status, RunStatus::Failed);
    assert!(m.error.unwrap().contains("wavelet"));
    assert!(m.outputs.is_empty());
}

#[test]
fn plot_writes_svg_and_rejects_bad_tables() {
    let tmp = tempfile::tempdir().unwrap();
    let p = write_config(tmp.path(), "fig1.toml", FIG1_GAUSS);
    assert!(run_cmd(&["fig1_posterior_means"], &p, tmp.path()).status.success());
    let table = tmp.path().join("fig1_posterior_means/fig1_posterior_means.csv");
    let o = bin().arg("plot").arg(&table).args(["--kind", "band"]).output().unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let svg = fs::read_to_string(table.with_extension("svg")).unwrap();
    assert!(svg.starts_with("<svg"));

    let bad = tmp.path().join("bad.csv");
    fs::write(&bad, "x,z\n0,1\n").unwrap();
    let o = bin().arg("plot").arg(&bad).args(["--kind", "line"]).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(!tmp.path().join("bad.svg").exists());
}

//! End-to-end checks of the command line front end: files land where they
//! should, bytes are reproducible, and config mistakes exit with code 2.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use pnl_readout::fit::FitResult;
use pnl_readout::io::Provenance;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_pnl-readout"));
    c.env_remove("PNL_READOUT_THREADS");
    c
}

fn run_ok(args: &[&str]) -> Output {
    let out = bin().args(args).output().unwrap();
    assert!(
        out.status.success(),
        "command {args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> T {
    serde_json::from_slice(&fs::read(path).unwrap()).unwrap()
}

#[test]
fn crossover_defaults_recover_ensemble_size() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("xo");
    run_ok(&["crossover", "--seed", "42", "--out", out.to_str().unwrap()]);

    let curve = fs::read_to_string(out.join("curve.csv")).unwrap();
    assert!(curve.starts_with("n,sigma_prime,err\n"));
    assert_eq!(curve.lines().count(), 1 + 13, "13 sweep points plus header");

    let fit: FitResult = read_json(&out.join("fit.json"));
    assert!(fit.converged);
    let (n_nv, err) = fit.get("n_nv").unwrap();
    assert!(
        (n_nv - 31.0).abs() < 2.5 * err,
        "recovered n_nv = {n_nv:.1} +- {err:.1}, truth 31"
    );

    let prov: Provenance = read_json(&out.join("curve.csv.meta.json"));
    assert_eq!(prov.seed, 42);
    assert_eq!(prov.config_sha256, "none");
    assert_eq!(prov.version, env!("CARGO_PKG_VERSION"));
    assert!(out.join("fit.json.meta.json").exists());
}

#[test]
fn outputs_are_byte_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.toml");
    fs::write(
        &config,
        "[run]\nseed = 11\n\n[ddspec]\nshots = 400\ntau_points = 5\nm = 200\nbins = 21\n",
    )
    .unwrap();
    let cfg = config.to_str().unwrap();

    let run = |out: &Path, threads: Option<&str>, env: Option<&str>| {
        let mut c = bin();
        c.args(["dd-spec", "--config", cfg, "--out", out.to_str().unwrap()]);
        if let Some(t) = threads {
            c.args(["--threads", t]);
        }
        if let Some(t) = env {
            c.env("PNL_READOUT_THREADS", t);
        }
        let o = c.output().unwrap();
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    };
    let (a, b, c) = (
        dir.path().join("t1"),
        dir.path().join("t4"),
        dir.path().join("tenv"),
    );
    run(&a, Some("1"), None);
    run(&b, Some("4"), None);
    run(&c, None, Some("2"));

    for name in ["ddspec.csv", "hist_x.csv", "hist_y.csv", "hist_z.csv"] {
        let bytes = fs::read(a.join(name)).unwrap();
        assert_eq!(bytes, fs::read(b.join(name)).unwrap(), "{name} differs 1 vs 4 threads");
        assert_eq!(bytes, fs::read(c.join(name)).unwrap(), "{name} differs vs env threads");
    }
    // Sidecars carry the config digest, which must match the file bytes.
    let prov: Provenance = read_json(&a.join("ddspec.csv.meta.json"));
    assert_eq!(
        prov.config_sha256,
        pnl_readout::io::sha256_hex(&fs::read(&config).unwrap())
    );
}

#[test]
fn reconstruct_consumes_ddspec_output() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.toml");
    fs::write(
        &config,
        "[run]\nseed = 3\n\n[ensemble]\nn_nv = 12\n\n[ddspec]\nshots = 500\ntau_points = 3\nm = 150\nbins = 25\n\n[reconstruct]\ncomponents = 15\ntheta_points = 9\nphi_points = 17\n",
    )
    .unwrap();
    let cfg = config.to_str().unwrap();
    let out = dir.path().join("tomo");
    run_ok(&["dd-spec", "--config", cfg, "--out", out.to_str().unwrap()]);
    assert!(out.join("reconstruct_meta.json").exists());

    run_ok(&[
        "reconstruct",
        "--config",
        cfg,
        "--out",
        out.to_str().unwrap(),
        "--input",
        out.to_str().unwrap(),
    ]);
    let mixture: serde_json::Value = read_json(&out.join("mixture.json"));
    let dphi = mixture["delta_phi_deg"].as_f64().unwrap();
    assert!((0.0..=90.0).contains(&dphi), "delta_phi_deg = {dphi}");
    let husimi = fs::read_to_string(out.join("husimi.csv")).unwrap();
    assert!(husimi.starts_with("theta,phi,q\n"));
    assert_eq!(husimi.lines().count(), 1 + 9 * 17);
}

#[test]
fn remaining_commands_produce_their_files() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.toml");
    fs::write(
        &config,
        concat!(
            "[run]\nseed = 9\n\n",
            "[rabi]\nshots = 500\nangle_points = 7\nm = 400\n\n",
            "[t1]\nshots = 300\nm_points = 6\nm_max = 60000\n\n",
            "[sensitivity]\ntau_points = 5\nm_points = 5\n\n",
            "[calibrate]\nshots = 800\n",
        ),
    )
    .unwrap();
    let cfg = config.to_str().unwrap();
    let out = dir.path().join("all");
    let o = out.to_str().unwrap();

    run_ok(&["rabi", "--config", cfg, "--out", o]);
    let rabi = fs::read_to_string(out.join("rabi.csv")).unwrap();
    assert_eq!(rabi.lines().count(), 1 + 7);

    run_ok(&["t1-decay", "--config", cfg, "--out", o]);
    assert_eq!(fs::read_to_string(out.join("t1.csv")).unwrap().lines().count(), 1 + 6);
    let decay: FitResult = read_json(&out.join("decay_fit.json"));
    assert!(decay.get("m_t1").is_some());

    run_ok(&["sensitivity", "--config", cfg, "--out", o]);
    assert_eq!(fs::read_to_string(out.join("map.csv")).unwrap().lines().count(), 1 + 25);
    let report: serde_json::Value = read_json(&out.join("report.json"));
    assert_eq!(report["entries"].as_array().unwrap().len(), 5);

    run_ok(&["calibrate-apd", "--config", cfg, "--out", o]);
    let cal: serde_json::Value = read_json(&out.join("calibration.json"));
    let k = cal["k"].as_f64().unwrap();
    assert!((k - 1.0).abs() < 0.05, "linear detector should calibrate near 1, got {k}");
}

#[test]
fn config_mistakes_exit_with_code_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let run_err = |cfg_text: Option<&str>, args: &[&str]| -> (i32, String) {
        let mut c = bin();
        if let Some(text) = cfg_text {
            let path = dir.path().join("bad.toml");
            fs::write(&path, text).unwrap();
            c.args(["--config", path.to_str().unwrap()]);
        }
        c.args(args).args(["--out", out.to_str().unwrap()]);
        let o = c.output().unwrap();
        assert!(!o.status.success());
        (
            o.status.code().unwrap(),
            String::from_utf8_lossy(&o.stderr).into_owned(),
        )
    };

    // Unreadable path.
    let (code, _) = run_err(None, &["crossover", "--config", "/no/such/file.toml"]);
    assert_eq!(code, 2);

    // Broken TOML syntax.
    let (code, msg) = run_err(Some("run = ["), &["crossover"]);
    assert_eq!(code, 2, "stderr: {msg}");

    // Misspelled key, reported by name.
    let (code, msg) = run_err(Some("[run]\nsedd = 1\n"), &["crossover"]);
    assert_eq!(code, 2);
    assert!(msg.contains("sedd"), "stderr should name the bad key: {msg}");

    // Config file present but the block for the command is missing.
    let (code, msg) = run_err(Some("[run]\nseed = 1\n"), &["rabi"]);
    assert_eq!(code, 2);
    assert!(msg.contains("rabi"), "stderr should name the block: {msg}");

    // Out-of-domain physics value.
    let (code, _) = run_err(Some("[ensemble]\ncontrast = 1.5\n\n[rabi]\n"), &["rabi"]);
    assert_eq!(code, 2);

    // Unparseable thread-count environment variable.
    let o = bin()
        .env("PNL_READOUT_THREADS", "many")
        .args(["crossover", "--out", out.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(o.status.code().unwrap(), 2);

    // The numerical failure path is a distinct code.
    assert_eq!(pnl_readout::Error::numerical("x").exit_code(), 3);
    assert_eq!(pnl_readout::Error::Config("x".into()).exit_code(), 2);
}

#[test]
fn format_and_grid_flags_shape_the_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fmt");
    run_ok(&[
        "crossover",
        "--seed",
        "5",
        "--format",
        "json",
        "--m-values",
        "1250,2500,5000,10000,25000",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(!out.join("curve.csv").exists(), "csv not requested");
    let curve: serde_json::Value = read_json(&out.join("curve.json"));
    assert_eq!(curve["points"].as_array().unwrap().len(), 5);
    assert!(out.join("curve.json.meta.json").exists());

    // Range syntax spans the grid with the configured point count.
    let out2 = dir.path().join("fmt2");
    run_ok(&[
        "crossover",
        "--seed",
        "5",
        "--m-values",
        "2000..8000",
        "--out",
        out2.to_str().unwrap(),
    ]);
    let curve = fs::read_to_string(out2.join("curve.csv")).unwrap();
    assert_eq!(curve.lines().count(), 1 + 13);
    let first = curve.lines().nth(1).unwrap();
    let last = curve.lines().last().unwrap();
    // n is the measured reference baseline, so it scatters around the
    // nominal 0.273 photons per repetition.
    let n_of = |line: &str| line.split(',').next().unwrap().parse::<f64>().unwrap();
    assert!((n_of(first) / (0.273 * 2000.0) - 1.0).abs() < 0.01);
    assert!((n_of(last) / (0.273 * 8000.0) - 1.0).abs() < 0.01);
}

#[test]
fn same_seed_same_bytes_different_seed_different_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let run_seed = |seed: &str, out: &Path| {
        run_ok(&[
            "rabi",
            "--seed",
            seed,
            "--out",
            out.to_str().unwrap(),
        ]);
        fs::read(out.join("rabi.csv")).unwrap()
    };
    let a = run_seed("7", &dir.path().join("a"));
    let b = run_seed("7", &dir.path().join("b"));
    let c = run_seed("8", &dir.path().join("c"));
    assert_eq!(a, b, "same seed must reproduce bytes");
    assert_ne!(a, c, "different seed must change the data");
}

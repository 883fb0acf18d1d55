//! End-to-end tests of the `trigfit` binary: artifact layout, determinism,
//! exit codes, config files, and the env fallback for thread count.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use trigfit_core::audio::{load_wav_left, write_wav, AudioSignal};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_trigfit"))
}

fn workdir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join("trigfit-cli-tests").join(name);
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(cmd: &mut Command) -> Output {
    cmd.output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

const TRIG_REFERENCE: &str = "95*sin(x)*cos(x)+37*sin(x)+90*sin(x)*cos(x)+45*sin(x)*cos(x)";

fn sine_wav(path: &Path, n: usize) {
    let samples: Vec<f64> = (0..n)
        .map(|i| 0.5 * (std::f64::consts::TAU * 220.0 * i as f64 / 44_100.0).sin())
        .collect();
    write_wav(&AudioSignal::new(44_100, samples).unwrap(), path).unwrap();
}

#[test]
fn generate_is_deterministic_and_writes_a_manifest() {
    let dir = workdir("generate");
    let out_a = dir.join("a.txt");
    let out_b = dir.join("b.txt");
    for out in [&out_a, &out_b] {
        let r = run(bin()
            .args(["generate", "trig", "--seed", "7", "--terms", "4", "--out"])
            .arg(out));
        assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    }
    let a = fs::read(&out_a).unwrap();
    let b = fs::read(&out_b).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.iter().filter(|&&c| c == b'+').count(), 3); // four terms
    assert!(dir.join("a.txt.manifest.json").exists());
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("a.txt.manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["command"], "generate");
    assert_eq!(manifest["seeds"]["seed"], 7);
}

#[test]
fn generate_mixed_draws_from_the_mixed_grammar() {
    let dir = workdir("generate-mixed");
    let out = dir.join("m.txt");
    let r = run(bin()
        .args([
            "generate", "mixed", "--seed", "3", "--max-terms", "10", "--degree", "2", "--out",
        ])
        .arg(&out));
    assert!(r.status.success());
    let text = fs::read_to_string(&out).unwrap();
    let expr = trigfit_core::expr::Expression::parse(text.trim()).unwrap();
    assert!(!expr.terms.is_empty() && expr.terms.len() <= 10);
    for term in &expr.terms {
        assert_eq!(term.coefficient, 1.0);
    }
}

#[test]
fn fit_orders_trig_below_the_baselines() {
    let dir = workdir("fit");
    let expr = dir.join("expr.txt");
    fs::write(&expr, format!("{TRIG_REFERENCE}\n")).unwrap();
    let out_dir = dir.join("results");
    let r = run(bin()
        .arg("fit")
        .arg("--expr")
        .arg(&expr)
        .args(["--spec", "linear", "--spec", "poly:2", "--spec", "trig"])
        .args(["--seed", "42"])
        .arg("--out-dir")
        .arg(&out_dir));
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));

    let table = fs::read_to_string(out_dir.join("error_table.csv")).unwrap();
    let mut errors = std::collections::BTreeMap::new();
    for line in table.lines().skip(1) {
        let (spec, err) = line.split_once(',').unwrap();
        errors.insert(spec.to_string(), err.parse::<f64>().unwrap());
    }
    let trig = errors["trig"];
    assert!(trig * 1e6 <= errors["linear"], "trig {trig} vs linear {}", errors["linear"]);
    assert!(trig * 1e6 <= errors["poly:2"]);

    for name in ["linear", "poly_2", "trig"] {
        let pred = fs::read_to_string(out_dir.join(format!("predictions_{name}.csv"))).unwrap();
        assert!(pred.starts_with("x,y_true,y_pred\n"));
        assert!(pred.lines().count() > 600);
    }
    let reports: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("reports.json")).unwrap()).unwrap();
    assert_eq!(reports.as_array().unwrap().len(), 3);
    for key in ["spec_name", "train_abs_error", "test_abs_error", "seed", "ridge"] {
        assert!(reports[0].get(key).is_some(), "missing report key {key}");
    }
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["inputs"][0]["sha256"].as_str().unwrap().len(), 64);
    assert!(manifest["outputs"].as_array().unwrap().len() >= 5);
}

#[test]
fn fit_runs_are_reproducible_byte_for_byte() {
    let dir = workdir("fit-repro");
    let expr = dir.join("expr.txt");
    fs::write(&expr, format!("{TRIG_REFERENCE}\n")).unwrap();
    let mut tables = Vec::new();
    for name in ["r1", "r2"] {
        let out_dir = dir.join(name);
        let r = run(bin()
            .arg("fit")
            .arg("--expr")
            .arg(&expr)
            .args(["--spec", "trig", "--seed", "13"])
            .arg("--out-dir")
            .arg(&out_dir));
        assert!(r.status.success());
        tables.push(fs::read(out_dir.join("error_table.csv")).unwrap());
    }
    assert_eq!(tables[0], tables[1]);
}

#[test]
fn unknown_spec_token_is_an_argument_error() {
    let dir = workdir("fit-badspec");
    let expr = dir.join("expr.txt");
    fs::write(&expr, TRIG_REFERENCE).unwrap();
    let r = run(bin()
        .arg("fit")
        .arg("--expr")
        .arg(&expr)
        .args(["--spec", "cubic:9000"]));
    assert_eq!(r.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&r.stderr);
    assert!(stderr.contains("expected linear | poly:D | trig | product:D:M"), "{stderr}");
}

#[test]
fn unrecovered_rank_deficiency_is_a_numerical_error() {
    let dir = workdir("fit-rankdef");
    let expr = dir.join("expr.txt");
    fs::write(&expr, TRIG_REFERENCE).unwrap();
    // Three grid points cannot support six columns, and the fallback ridge
    // is disabled.
    let r = run(bin()
        .arg("fit")
        .arg("--expr")
        .arg(&expr)
        .args(["--spec", "poly:5", "--lo", "0", "--hi", "0.02", "--step", "0.01"])
        .arg("--no-ridge-fallback")
        .arg("--out-dir")
        .arg(dir.join("out")));
    assert_eq!(r.status.code(), Some(3));
    let stderr = String::from_utf8_lossy(&r.stderr);
    assert!(stderr.contains("rank-deficient"), "{stderr}");
}

#[test]
fn malformed_expression_file_is_an_argument_error() {
    let dir = workdir("fit-badexpr");
    let expr = dir.join("expr.txt");
    fs::write(&expr, "sin(x)+!!").unwrap();
    let r = run(bin()
        .arg("fit")
        .arg("--expr")
        .arg(&expr)
        .args(["--spec", "trig"]));
    assert_eq!(r.status.code(), Some(2));
}

#[test]
fn decompose_writes_fits_losses_and_trace() {
    let dir = workdir("decompose");
    let wav = dir.join("in.wav");
    sine_wav(&wav, 250);
    let out_dir = dir.join("out");
    let r = run(bin()
        .arg("decompose")
        .arg("--wav")
        .arg(&wav)
        .args(["--frames", "2", "--frame-len", "100", "--waves", "3", "--passes", "2"])
        .arg("--out-dir")
        .arg(&out_dir));
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let fits: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("fits.json")).unwrap()).unwrap();
    assert_eq!(fits["frames"].as_array().unwrap().len(), 2);
    assert_eq!(fits["frame_len"], 100);
    assert_eq!(fits["config"]["n_waves"], 3);
    assert_eq!(fits["frames"][0]["params"].as_array().unwrap().len(), 3);
    assert_eq!(fits["frames"][1]["start_index"], 100);

    let losses = fs::read_to_string(out_dir.join("frame_losses.csv")).unwrap();
    assert!(losses.starts_with("frame,start_index,frame_loss,diverged\n"));
    assert_eq!(losses.lines().count(), 3);

    let trace = fs::read_to_string(out_dir.join("trace.csv")).unwrap();
    assert!(trace.starts_with("index,time,original,predicted,predicted_mean_wave\n"));
    assert_eq!(trace.lines().count(), 201);

    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("manifest.json")).unwrap()).unwrap();
    // Defaults are recorded even when not passed on the command line.
    assert_eq!(manifest["args"]["step"], 1.0);
    assert_eq!(manifest["args"]["mode"], "independent");
    assert_eq!(manifest["args"]["rate-divisor"], 44100.0);
}

#[test]
fn non_wav_input_exits_with_the_format_code() {
    let dir = workdir("decompose-notwav");
    let bogus = dir.join("not_audio.wav");
    fs::write(&bogus, "this is not a wav file").unwrap();
    let r = run(bin()
        .arg("decompose")
        .arg("--wav")
        .arg(&bogus)
        .args(["--frames", "1", "--frame-len", "10"]));
    assert_eq!(r.status.code(), Some(4));
}

#[test]
fn oversized_frame_request_is_an_argument_error() {
    let dir = workdir("decompose-short");
    let wav = dir.join("in.wav");
    sine_wav(&wav, 50);
    let r = run(bin()
        .arg("decompose")
        .arg("--wav")
        .arg(&wav)
        .args(["--frames", "2", "--frame-len", "100"])
        .arg("--out-dir")
        .arg(dir.join("out")));
    assert_eq!(r.status.code(), Some(2));
}

#[test]
fn synth_round_trips_the_decomposition() {
    let dir = workdir("synth");
    let wav = dir.join("in.wav");
    sine_wav(&wav, 2000);
    let out_dir = dir.join("out");
    let r = run(bin()
        .arg("decompose")
        .arg("--wav")
        .arg(&wav)
        .args(["--frames", "2", "--frame-len", "1000", "--waves", "4", "--passes", "3"])
        .arg("--out-dir")
        .arg(&out_dir));
    assert!(r.status.success());

    let resynth = dir.join("resynth.wav");
    let r = run(bin()
        .arg("synth")
        .arg("--fits")
        .arg(out_dir.join("fits.json"))
        .arg("--out")
        .arg(&resynth)
        .args(["--no-amplitude", "--divide"]));
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    assert!(stdout(&r).contains("clamped"));
    let signal = load_wav_left(&resynth).unwrap();
    assert_eq!(signal.len(), 2000);
    assert!(signal.samples.iter().all(|v| v.is_finite()));
    assert!(dir.join("resynth.wav.manifest.json").exists());
}

#[test]
fn synth_of_a_silence_fit_is_near_silent() {
    let dir = workdir("synth-silence");
    let wav = dir.join("silence.wav");
    write_wav(&AudioSignal::new(44_100, vec![0.0; 400]).unwrap(), &wav).unwrap();
    let out_dir = dir.join("out");
    let r = run(bin()
        .arg("decompose")
        .arg("--wav")
        .arg(&wav)
        .args(["--frames", "2", "--frame-len", "200", "--waves", "2", "--passes", "2"])
        .arg("--out-dir")
        .arg(&out_dir));
    assert!(r.status.success());
    let resynth = dir.join("resynth.wav");
    let r = run(bin()
        .arg("synth")
        .arg("--fits")
        .arg(out_dir.join("fits.json"))
        .arg("--out")
        .arg(&resynth));
    assert!(r.status.success());
    let signal = load_wav_left(&resynth).unwrap();
    let peak = signal.samples.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    assert!(peak < 0.05, "peak {peak}");
}

#[test]
fn missing_fits_file_exits_with_the_io_code() {
    let r = run(bin()
        .arg("synth")
        .args(["--fits", "/nonexistent/fits.json", "--out", "/tmp/x.wav"]));
    assert_eq!(r.status.code(), Some(4));
}

#[test]
fn eval_compares_csv_columns() {
    let dir = workdir("eval");
    let a = dir.join("a.csv");
    let b = dir.join("b.csv");
    fs::write(&a, "1\n2\n").unwrap();
    fs::write(&b, "0\n0\n").unwrap();
    let r = run(bin().arg("eval").arg(&a).arg(&b));
    assert!(r.status.success());
    assert_eq!(stdout(&r).trim(), "3");

    // Identical files compare to zero.
    let r = run(bin().arg("eval").arg(&a).arg(&a));
    assert_eq!(stdout(&r).trim(), "0");

    // Named columns against a headered file.
    let c = dir.join("c.csv");
    fs::write(&c, "x,y_true,y_pred\n0,1.5,1.25\n1,2.0,2.5\n").unwrap();
    let r = run(bin()
        .arg("eval")
        .arg(&c)
        .arg(&c)
        .args(["--pred-col", "y_pred", "--true-col", "y_true"]));
    assert!(r.status.success());
    assert_eq!(stdout(&r).trim(), "0.75");

    // Misaligned lengths are an argument error.
    let d = dir.join("d.csv");
    fs::write(&d, "0\n0\n0\n").unwrap();
    let r = run(bin().arg("eval").arg(&a).arg(&d));
    assert_eq!(r.status.code(), Some(2));

    // Missing file is an I/O error.
    let r = run(bin().arg("eval").arg(dir.join("nope.csv")).arg(&a));
    assert_eq!(r.status.code(), Some(4));
}

#[test]
fn fit_predictions_evaluate_to_near_zero_error_for_trig() {
    let dir = workdir("eval-pipeline");
    let expr = dir.join("expr.txt");
    fs::write(&expr, TRIG_REFERENCE).unwrap();
    let out_dir = dir.join("results");
    let r = run(bin()
        .arg("fit")
        .arg("--expr")
        .arg(&expr)
        .args(["--spec", "trig"])
        .arg("--out-dir")
        .arg(&out_dir));
    assert!(r.status.success());
    let pred = out_dir.join("predictions_trig.csv");
    let r = run(bin()
        .arg("eval")
        .arg(&pred)
        .arg(&pred)
        .args(["--pred-col", "y_pred", "--true-col", "y_true"]));
    assert!(r.status.success());
    let total: f64 = stdout(&r).trim().parse().unwrap();
    assert!(total <= 1e-6, "whole-grid absolute error {total}");
}

#[test]
fn config_file_supplies_flags_and_cli_overrides() {
    let dir = workdir("config");
    let expr = dir.join("expr.txt");
    fs::write(&expr, TRIG_REFERENCE).unwrap();
    let config = dir.join("fit.json");
    let out_a = dir.join("a");
    fs::write(
        &config,
        serde_json::json!({
            "expr": expr.display().to_string(),
            "spec": ["trig", "linear"],
            "seed": 11,
            "out-dir": out_a.display().to_string(),
        })
        .to_string(),
    )
    .unwrap();
    let r = run(bin().arg("fit").arg("--config").arg(&config));
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let table_a = fs::read_to_string(out_a.join("error_table.csv")).unwrap();
    assert!(table_a.contains("trig,") && table_a.contains("linear,"));
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_a.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["args"]["seed"], 11);

    // A command-line flag beats the config value.
    let out_b = dir.join("b");
    let r = run(bin()
        .arg("fit")
        .arg("--config")
        .arg(&config)
        .args(["--seed", "99"])
        .arg("--out-dir")
        .arg(&out_b));
    assert!(r.status.success());
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_b.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["args"]["seed"], 99);
}

#[test]
fn thread_env_var_backs_the_threads_flag() {
    let dir = workdir("threads");
    let wav = dir.join("in.wav");
    sine_wav(&wav, 300);
    let out_env = dir.join("via-env");
    let r = run(bin()
        .arg("decompose")
        .arg("--wav")
        .arg(&wav)
        .args(["--frames", "3", "--frame-len", "100", "--waves", "2", "--passes", "2"])
        .arg("--out-dir")
        .arg(&out_env)
        .env("TRIGFIT_THREADS", "1"));
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_env.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["args"]["threads"], 1);

    // Output is identical independent of the thread count.
    let out_two = dir.join("two-threads");
    let r = run(bin()
        .arg("decompose")
        .arg("--wav")
        .arg(&wav)
        .args(["--frames", "3", "--frame-len", "100", "--waves", "2", "--passes", "2"])
        .args(["--threads", "2"])
        .arg("--out-dir")
        .arg(&out_two));
    assert!(r.status.success());
    assert_eq!(
        fs::read(out_env.join("fits.json")).unwrap(),
        fs::read(out_two.join("fits.json")).unwrap()
    );
}

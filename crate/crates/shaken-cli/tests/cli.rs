//! End-to-end tests of the binary: determinism, output formats, exit codes
//! and the summary statistics against exact enumeration.

use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

use shaken::exact::{shaken_stationary, StateSpace};
use shaken::lattice::z2_doubling;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_shaken"))
}

fn run_ok(args: &[&str]) -> Output {
    let out = bin().args(args).output().expect("binary runs");
    assert!(
        out.status.success(),
        "exit {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn tmp(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("shaken-cli-{}-{name}", std::process::id()));
    let _ = fs::remove_file(&dir);
    dir
}

fn summary_value(stdout: &str, key: &str) -> String {
    stdout
        .lines()
        .find_map(|l| l.strip_prefix(&format!("{key} ")))
        .unwrap_or_else(|| panic!("missing key '{key}' in:\n{stdout}"))
        .to_string()
}

#[test]
fn critical_limits_match_known_roots() {
    let cases = [
        (vec!["critical", "--limit", "square"], 2f64.sqrt() - 1.0),
        (vec!["critical", "--limit", "hexagonal"], 1.0 / 3f64.sqrt()),
        (vec!["critical", "--limit", "triangular"], 2.0 - 3f64.sqrt()),
        (vec!["critical", "--fix", "q=0"], 1.0 / 3f64.sqrt()),
    ];
    for (args, expect_t) in cases {
        let out = run_ok(&args);
        let stdout = String::from_utf8(out.stdout).unwrap();
        let t: f64 = summary_value(&stdout, "t").parse().unwrap();
        assert!((t - expect_t).abs() < 1e-10, "{args:?}: t = {t}");
        let residual: f64 = summary_value(&stdout, "residual").parse().unwrap();
        assert!(residual.abs() < 1e-12);
    }
}

#[test]
fn sample_runs_are_deterministic() {
    let trace_a = tmp("det-a.csv");
    let trace_b = tmp("det-b.csv");
    let args = |trace: &PathBuf| {
        vec![
            "sample".into(),
            "--lattice".into(),
            "z2".into(),
            "--L".into(),
            "4".into(),
            "--J".into(),
            "1".into(),
            "--q".into(),
            "3".into(),
            "--sweeps".into(),
            "500".into(),
            "--seed".into(),
            "7".into(),
            "--trace".into(),
            trace.display().to_string(),
            "--force".into(),
        ]
    };
    let a = run_ok(&args(&trace_a).iter().map(String::as_str).collect::<Vec<_>>());
    let b = run_ok(&args(&trace_b).iter().map(String::as_str).collect::<Vec<_>>());
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(fs::read(&trace_a).unwrap(), fs::read(&trace_b).unwrap());
}

#[test]
fn zero_sweeps_writes_header_and_initial_row() {
    let trace = tmp("zero.csv");
    run_ok(&[
        "sample", "--lattice", "z2", "--L", "3", "--J", "1", "--q", "1", "--sweeps", "0",
        "--seed", "1", "--trace", &trace.display().to_string(), "--force",
    ]);
    let text = fs::read_to_string(&trace).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0], "sweep,energy,magnetization,best_energy");
    assert!(lines[1].starts_with("0,"));
}

#[test]
fn exit_codes_follow_the_contract() {
    // usage
    let out = bin().args(["sample", "--no-such-flag"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let out = bin()
        .args(["sample", "--lattice", "z2", "--q", "1", "--lambda", "nope"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    // missing q for a parallel kernel
    let out = bin().args(["sample", "--lattice", "z2"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    // no instance source at all
    let out = bin().args(["sample", "--q", "1"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    // lattice-only flags with a non-lattice source
    let out = bin()
        .args(["optimize", "--ea", "4", "--J", "2", "--q", "3"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let out = bin()
        .args(["optimize", "--ea", "4", "--orient", "seeded", "--q", "3"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    // I/O
    let out = bin()
        .args(["sample", "--instance", "/definitely/not/here", "--q", "1"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    // verification failure with a forced zero budget; the report names it
    let out = bin()
        .args(["verify", "--budget", "stationarity=0"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("[FAIL] stationarity"));
    assert!(stdout.contains("stationarity_pass false"));
    // help exits cleanly
    let out = bin().args(["--help"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn verify_passes_on_defaults() {
    let out = run_ok(&["verify"]);
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert_eq!(summary_value(&stdout, "all_pass"), "true");
    // each check appears exactly once in the report section
    for check in [
        "stationarity",
        "reversibility",
        "marginal_identity",
        "alternate_stationarity",
        "alternate_nonreversibility",
        "unpacked_weight",
        "minimum_identity",
    ] {
        let hits = stdout
            .lines()
            .filter(|l| l.starts_with("[PASS]") && l.contains(&format!(" {check}:")))
            .count();
        assert_eq!(hits, 1, "check '{check}' listed {hits} times");
    }
}

#[test]
fn overwrite_needs_force() {
    let trace = tmp("guard.csv");
    let base = [
        "sample", "--lattice", "z2", "--L", "2", "--J", "1", "--q", "1", "--sweeps", "1",
        "--seed", "0",
    ];
    let mut args: Vec<String> = base.iter().map(|s| s.to_string()).collect();
    args.push("--trace".into());
    args.push(trace.display().to_string());
    run_ok(&args.iter().map(String::as_str).collect::<Vec<_>>());
    // second run without --force refuses
    let out = bin().args(&args).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    // with --force it overwrites
    args.push("--force".into());
    run_ok(&args.iter().map(String::as_str).collect::<Vec<_>>());
}

#[test]
fn instance_file_drives_a_run() {
    let path = tmp("instance.txt");
    fs::write(
        &path,
        "# three spins on a path\nv 0 0.1\nv 1 0\nv 2 -0.1\ne 0 1 1.0\ne 1 2 -0.5\nb 2 +1\n",
    )
    .unwrap();
    let trace = tmp("instance-trace.csv");
    let out = run_ok(&[
        "optimize",
        "--instance",
        &path.display().to_string(),
        "--q",
        "2",
        "--sweeps",
        "200",
        "--seed",
        "3",
        "--trace",
        &trace.display().to_string(),
        "--force",
    ]);
    let stdout = String::from_utf8(out.stdout).unwrap();
    let best = summary_value(&stdout, "best_configuration");
    assert_eq!(best.len(), 3);
    assert!(best.ends_with('+'), "frozen site must stay +1, got {best}");
    let best_energy: f64 = summary_value(&stdout, "best_energy").parse().unwrap();
    // exhaustive optimum of this 2-free-spin instance
    let min = shaken::exact::brute_force_min(
        &shaken::graph::parse_graph(&fs::read_to_string(&path).unwrap())
            .unwrap()
            .graph,
    )
    .unwrap()
    .min_energy;
    assert!((best_energy - min).abs() < 1e-12, "best {best_energy} vs exact {min}");
}

#[test]
fn orientation_file_uses_instance_ids() {
    let inst = tmp("oriented-instance.txt");
    fs::write(&inst, "v 100 0\nv 200 0\nv 300 0\ne 100 200 1\ne 200 300 1\n").unwrap();
    let ofile = tmp("oriented.txt");
    fs::write(&ofile, "o 200 100\no 200 300\n").unwrap();
    let trace = tmp("oriented.csv");
    run_ok(&[
        "sample",
        "--instance",
        &inst.display().to_string(),
        "--orientation",
        &ofile.display().to_string(),
        "--q",
        "1",
        "--sweeps",
        "10",
        "--seed",
        "0",
        "--trace",
        &trace.display().to_string(),
        "--force",
    ]);
    // an orientation file that misses an edge is an I/O-level failure
    fs::write(&ofile, "o 200 100\n").unwrap();
    let out = bin()
        .args([
            "sample",
            "--instance",
            &inst.display().to_string(),
            "--orientation",
            &ofile.display().to_string(),
            "--q",
            "1",
            "--trace",
            &trace.display().to_string(),
            "--force",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn ea_source_reports_threshold_guarantee() {
    let trace = tmp("ea.csv");
    let out = run_ok(&[
        "optimize", "--ea", "4", "--ea-seed", "2", "--q", "2.5", "--sweeps", "100", "--seed",
        "1", "--trace", &trace.display().to_string(), "--force",
    ]);
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert_eq!(summary_value(&stdout, "q_threshold"), "2");
    assert_eq!(summary_value(&stdout, "guaranteed"), "true");
}

#[test]
fn heatbath_kernel_gets_the_paired_budget() {
    // same --sweeps must yield equal attempted-update counts for both
    // kernels: one parallel sweep pairs with 2|V| single flips
    let mut attempted = Vec::new();
    for kernel in ["shaken", "heatbath"] {
        let trace = tmp(&format!("paired-{kernel}.csv"));
        let out = run_ok(&[
            "optimize", "--ea", "4", "--ea-seed", "2", "--q", "2.5", "--kernel", kernel,
            "--sweeps", "50", "--seed", "1", "--trace", &trace.display().to_string(), "--force",
        ]);
        let stdout = String::from_utf8(out.stdout).unwrap();
        attempted.push(summary_value(&stdout, "attempted_updates"));
    }
    assert_eq!(attempted[0], attempted[1]);
    assert_eq!(attempted[0], (2 * 16 * 50).to_string());
}

#[test]
fn beta_scales_before_the_threshold() {
    // beta halves couplings and q together, so the reported threshold must
    // be the post-scaling one
    let trace = tmp("beta.csv");
    let out = run_ok(&[
        "optimize", "--ea", "4", "--ea-seed", "2", "--q", "4", "--beta", "0.5", "--sweeps",
        "10", "--seed", "1", "--trace", &trace.display().to_string(), "--force",
    ]);
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert_eq!(summary_value(&stdout, "q_threshold"), "1");
    assert_eq!(summary_value(&stdout, "q"), "2");
    assert_eq!(summary_value(&stdout, "guaranteed"), "true");
}

#[test]
fn long_run_magnetization_matches_enumeration() {
    // 2x2 torus summary statistic against the exact stationary average,
    // within three batch-mean standard errors
    let d = z2_doubling(2, 0.3, 0.3, 0.3, &[]).unwrap();
    let space = StateSpace::for_graph(d.parent());
    let pi = shaken_stationary(&d);
    let exact_abs_m = pi.expect(|i| space.config(i).magnetization().abs());

    let trace = tmp("long.csv");
    let out = run_ok(&[
        "sample", "--lattice", "z2", "--L", "2", "--J", "0.3", "--q", "0.3", "--lambda", "0.3",
        "--sweeps", "200000", "--seed", "3", "--trace", &trace.display().to_string(), "--force",
    ]);
    let stdout = String::from_utf8(out.stdout).unwrap();
    let mean: f64 = summary_value(&stdout, "mean_abs_magnetization").parse().unwrap();

    let csv = fs::read_to_string(&trace).unwrap();
    let samples: Vec<f64> = csv
        .lines()
        .skip(2) // header and initial row
        .map(|l| l.split(',').nth(2).unwrap().parse::<f64>().unwrap().abs())
        .collect();
    let batches = 100;
    let size = samples.len() / batches;
    let means: Vec<f64> = (0..batches)
        .map(|b| samples[b * size..(b + 1) * size].iter().sum::<f64>() / size as f64)
        .collect();
    let grand = means.iter().sum::<f64>() / batches as f64;
    let var = means.iter().map(|m| (m - grand).powi(2)).sum::<f64>() / (batches as f64 - 1.0);
    let se = (var / batches as f64).sqrt().max(1e-9);
    assert!(
        (mean - exact_abs_m).abs() <= 3.0 * se,
        "summary mean {mean} vs exact {exact_abs_m} (3se = {})",
        3.0 * se
    );
}

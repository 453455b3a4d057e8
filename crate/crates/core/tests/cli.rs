use std::fs;
use std::path::Path;
use std::process::Command;

use spduff::cli::{
    execute, parse_args, CommandKind, ProblemSource, RunConfig, EXIT_CERTIFICATE, EXIT_OK,
    EXIT_USAGE,
};
use spduff::{builtin, Error};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_spduff"));
    c.env_remove("SPDUFF_THREADS");
    c
}

fn code(c: &mut Command) -> i32 {
    c.output().unwrap().status.code().unwrap()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn eps_list_from_flags() {
    let cfg = parse_args(["spduff", "sweep", "--builtin", "D1", "--eps", "0.02,0.01"]).unwrap();
    assert_eq!(cfg.command, CommandKind::Sweep);
    assert_eq!(cfg.epsilons, vec![0.02, 0.01]);
    assert_eq!(cfg.problem, ProblemSource::Builtin("D1".into()));
}

#[test]
fn config_file_rules() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cfg.json");
    let usage = |text: &str| {
        fs::write(&path, text).unwrap();
        let p = path.to_str().unwrap();
        match parse_args(["spduff", "sweep", "--builtin", "D0", "--config", p]) {
            Err(Error::Usage(m)) => m,
            other => panic!("{other:?}"),
        }
    };
    assert!(usage(r#"{"delta": -1}"#).contains("delta"));
    assert!(usage(r#"{"bogus_key": 1}"#).contains("bogus_key"));
    assert!(usage(r#"{"epsilon": 0.01, "epsilons": [0.02, 0.01]}"#).contains("conflicting"));

    fs::write(&path, r#"{"delta": 0.04, "seed": 7}"#).unwrap();
    let p = path.to_str().unwrap();
    let cfg = parse_args([
        "spduff",
        "sweep",
        "--builtin",
        "D0",
        "--config",
        p,
        "--delta",
        "0.03",
    ])
    .unwrap();
    assert_eq!(cfg.delta, 0.03);
    assert_eq!(cfg.seed, 7);

    assert!(matches!(
        parse_args([
            "spduff",
            "simulate",
            "--builtin",
            "D0",
            "--eps",
            "0.02,0.01"
        ]),
        Err(Error::Usage(_))
    ));
}

#[test]
fn resolved_config_round_trips() {
    let cfg = parse_args([
        "spduff",
        "energy",
        "--builtin",
        "D1",
        "--t",
        "0.1",
        "--well",
        "left",
        "--seed",
        "3",
    ])
    .unwrap();
    let back = RunConfig::from_json(&cfg.to_json().unwrap()).unwrap();
    assert_eq!(cfg, back);
}

#[test]
fn exit_codes() {
    let out = bin().args(["check", "--builtin", "D0"]).output().unwrap();
    assert_eq!(out.status.code(), Some(EXIT_CERTIFICATE));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(report.to_string().contains("A1"));

    assert_eq!(code(bin().args(["check", "--builtin", "D1"])), EXIT_OK);
    assert_eq!(code(bin().args(["sweep", "--builtin", "D9"])), EXIT_USAGE);
    assert_eq!(
        code(bin().args(["sweep", "--builtin", "D0", "--delta", "-1"])),
        EXIT_USAGE
    );
    assert_eq!(code(bin().args(["frobnicate"])), EXIT_USAGE);
    assert_eq!(code(bin().args(["--help"])), EXIT_OK);
}

#[test]
fn problem_file_input() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d1.json");
    fs::write(&path, builtin("D1").unwrap().to_json().unwrap()).unwrap();
    let out = bin()
        .args(["constants", path.to_str().unwrap(), "--eps", "0.01"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(EXIT_OK));
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["schema_version"], 1);
}

#[test]
fn harmonic_sweep_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = parse_args([
        "spduff",
        "sweep",
        "--builtin",
        "D0",
        "--out",
        dir.path().to_str().unwrap(),
    ])
    .unwrap();
    let out = execute(&cfg).unwrap();
    assert!(out.certificate_passed);
    let csv = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(
        lines[0],
        "epsilon,chart,z,s_max,bound,envelope_sup_error,converged_envelope_error"
    );
    assert_eq!(lines.len(), 4);
    assert_eq!(
        fs::read_to_string(dir.path().join("ratios.csv"))
            .unwrap()
            .lines()
            .count(),
        3
    );
    for f in [
        "sweep.json",
        "config.json",
        "manifold.svg",
        "oscillations.svg",
    ] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    assert_eq!(json(&dir.path().join("sweep.json"))["schema_version"], 1);
    let saved =
        RunConfig::from_json(&fs::read_to_string(dir.path().join("config.json")).unwrap()).unwrap();
    assert_eq!(saved, cfg);
}

#[test]
fn phase_portrait_panels() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    assert_eq!(
        code(bin().args(["phase-portrait", "--builtin", "D1", "--t", "0", "--out", d])),
        EXIT_OK
    );
    let svgs: Vec<_> = fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "svg"))
        .collect();
    assert_eq!(svgs.len(), 1);
    let s = fs::read_to_string(&svgs[0]).unwrap();
    assert_eq!(s.matches(r#"<g class="panel">"#).count(), 3);
    assert!(s.contains("f - m") && s.contains("V(t, y)") && s.contains("phase curve"));
}

#[test]
fn simulate_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let args = [
        "simulate",
        "--builtin",
        "D0",
        "--eps",
        "0.01",
        "--y0",
        "1",
        "--w0",
        "0",
        "--out",
        d,
    ];
    assert_eq!(code(bin().args(args)), EXIT_OK);
    let traj = fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    assert!(traj.starts_with("t,y,w,H\n"));
    let events = fs::read_to_string(dir.path().join("events.csv")).unwrap();
    assert!(events.starts_with("branch,t_star,direction,residual\n"));
    assert!(events.lines().count() > 30);
}

#[test]
fn repeated_sweeps_are_identical() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "sweep",
        "--builtin",
        "D1",
        "--seed",
        "11",
        "--out",
        dir.path().to_str().unwrap(),
    ];
    let snapshot = || {
        assert_eq!(code(bin().args(args)), EXIT_OK);
        let mut files: Vec<_> = fs::read_dir(dir.path())
            .unwrap()
            .map(|e| {
                let e = e.unwrap();
                (e.file_name(), fs::read_to_string(e.path()).unwrap())
            })
            .collect();
        files.sort();
        files
    };
    let first = snapshot();
    let second = snapshot();
    assert!(first.len() >= 6);
    assert_eq!(first, second);
}

#[test]
fn thread_cap_is_honoured() {
    let out = bin()
        .env("SPDUFF_THREADS", "1")
        .args(["sweep", "--builtin", "D0", "--eps", "0.02,0.01"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(EXIT_OK));
    assert_eq!(
        code(
            bin()
                .env("SPDUFF_THREADS", "zero")
                .args(["check", "--builtin", "D1"])
        ),
        EXIT_USAGE
    );
}

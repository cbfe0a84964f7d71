use std::fs;
use std::path::Path;
use std::process::Command;

use c3sim::{Mechanism, ScenarioVariant, SyntheticSpec};
use c3sim_harness::commands::{gen_synth, optimize, report, simulate, verify, VerifyParams};
use c3sim_harness::config::ExperimentConfig;

const TVN: &str = r#"
seeds = [0, 1, 2, 3, 4, 5, 6, 7, 8, 9]

[[mechanisms]]
name = "brcm-10"
kind = "brcm"
f = [1.0, 0.0]

[environment]
kind = "tvn"
n = 2
attention = [1.0, 0.0]

[dynamics]
horizon = 200
step = 2.0

[optimizer]
epochs = 50
inner_steps = 5
mech_step = 1.0
creator_step = 2.0
initial_f = [1.0, 1.0]
"#;

fn write_config(dir: &Path, text: &str) -> std::path::PathBuf {
    let p = dir.join("cfg.toml");
    fs::write(&p, text).unwrap();
    p
}

#[test]
fn tvn_brcm_reaches_optimum_every_seed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig::load(&write_config(dir.path(), TVN)).unwrap();
    let rows = simulate(&cfg, dir.path()).unwrap();
    assert_eq!(rows.len(), 10);
    assert!(rows.iter().all(|r| r.final_welfare == 1.0));
    let summary = fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    let lines: Vec<&str> = summary.lines().collect();
    assert_eq!(lines[0], "mechanism,seed,final_welfare,final_welfare_sd");
    assert_eq!(lines.len(), 1 + 10 + 1);
    assert_eq!(lines[11], "brcm-10,aggregate,1,0");
    assert!(dir.path().join("trajectories/brcm-10_seed3.csv").exists());
}

#[test]
fn summary_is_deterministic_and_recomputable() {
    let text = r#"
seeds = [0, 1, 2]
mechanisms = ["brcm-star", "m3-exposure", "brcm-opt"]

[environment]
kind = "synthetic"
n = 4
sizes = [6, 3, 2, 1, 1, 1, 1, 1]
m = 16

[dynamics]
horizon = 40
step = 0.2

[optimizer]
epochs = 8
inner_steps = 5
mech_step = 0.1
creator_step = 0.2
"#;
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig::load(&write_config(a.path(), text)).unwrap();
    simulate(&cfg, a.path()).unwrap();
    simulate(&cfg, b.path()).unwrap();
    let sa = fs::read(a.path().join("summary.csv")).unwrap();
    assert_eq!(sa, fs::read(b.path().join("summary.csv")).unwrap());
    let header = String::from_utf8(sa).unwrap();
    assert!(header.starts_with(
        "mechanism,seed,final_welfare,final_welfare_sd,group_1,group_1_sd,group_2,group_2_sd,group_3,group_3_sd\n"
    ));
    assert!(a.path().join("epochs/brcm-opt_seed2.csv").exists());
    let rows = report(a.path()).unwrap();
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| r.consistent && r.seeds == 3));
}

#[test]
fn optimize_writes_epoch_logs() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::load(&write_config(dir.path(), TVN)).unwrap();
    cfg.seeds = vec![0, 1];
    let rows = optimize(&cfg, dir.path()).unwrap();
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r.best_welfare == 1.0));
    let log = fs::read_to_string(dir.path().join("epochs/opt_seed1.csv")).unwrap();
    assert_eq!(log.lines().count(), 51);
}

#[test]
fn config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let bad = TVN.replace("[[mechanisms]]\nname = \"brcm-10\"\nkind = \"brcm\"\nf = [1.0, 0.0]", "mechanisms = [\"brcm-2\"]");
    let bad = bad.replacen("seeds = [0, 1, 2, 3, 4, 5, 6, 7, 8, 9]\n", "", 1);
    let bad = format!("seeds = [0]\n{bad}");
    let cfg = ExperimentConfig::load(&write_config(dir.path(), &bad)).unwrap();
    assert!(cfg.arms().is_err());
    let mut cfg = ExperimentConfig::load(&write_config(dir.path(), TVN)).unwrap();
    cfg.seeds.clear();
    assert!(simulate(&cfg, dir.path()).is_err());
}

#[test]
fn gen_synth_default_and_determinism() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    gen_synth(&SyntheticSpec::default(), ScenarioVariant::G1, a.path()).unwrap();
    gen_synth(&SyntheticSpec::default(), ScenarioVariant::G1, b.path()).unwrap();
    let pa = fs::read(a.path().join("population.csv")).unwrap();
    assert_eq!(pa, fs::read(b.path().join("population.csv")).unwrap());
    let text = String::from_utf8(pa).unwrap();
    assert_eq!(text.lines().count(), 53);
    let labels: Vec<&str> = text.lines().skip(1).map(|l| l.split(',').nth(1).unwrap()).collect();
    assert_eq!(labels.iter().filter(|l| **l == "0").count(), 20);
    assert_eq!(labels.iter().filter(|l| **l == "7").count(), 1);

    let wrong = SyntheticSpec { m: Some(50), ..SyntheticSpec::default() };
    assert!(gen_synth(&wrong, ScenarioVariant::G1, a.path()).is_err());
    gen_synth(&SyntheticSpec::default(), ScenarioVariant::G2 { lambda: 0.5 }, a.path()).unwrap();
    let creators = fs::read_to_string(a.path().join("creators.csv")).unwrap();
    assert!(creators.lines().nth(1).unwrap().starts_with("0,0.5,"));
}

#[test]
fn verify_sweeps_and_rejects_broken_mechanism() {
    let params = VerifyParams { samples: 200, ..VerifyParams::default() };
    let lines = verify(&params).unwrap();
    assert!(lines.iter().all(|l| l.passed), "{lines:?}");
    // 3 n values x 2 K values x (3 baselines + 1 optimality check) + 5 fuzz checks
    assert_eq!(lines.len(), 24 + 5);

    let empty = VerifyParams { ns: vec![], samples: 50, ..VerifyParams::default() };
    let lines = verify(&empty).unwrap();
    assert!(lines.iter().all(|l| l.passed));
    assert!(lines[0].detail.contains("warning"));

    let broken = VerifyParams {
        ns: vec![],
        samples: 200,
        mechanism: Some(Mechanism::Brcm { f: vec![0.5, 1.0, 0.2] }),
        ..VerifyParams::default()
    };
    let lines = verify(&broken).unwrap();
    assert!(!lines.last().unwrap().passed);
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_c3sim");
    let dir = tempfile::tempdir().unwrap();
    let mech = dir.path().join("m.toml");
    fs::write(&mech, "kind = \"brcm\"\nf = [0.5, 1.0]\n").unwrap();
    let status = Command::new(bin)
        .args(["verify", "--n", "--samples", "100", "--mechanism"])
        .arg(&mech)
        .output()
        .unwrap();
    assert!(!status.status.success());
    assert!(String::from_utf8_lossy(&status.stdout).contains("FAIL supplied-brcm-merit-based"));

    let ok = Command::new(bin).args(["verify", "--n", "3", "--k", "1", "--samples", "100"]).output().unwrap();
    assert!(ok.status.success(), "{}", String::from_utf8_lossy(&ok.stdout));

    let cfg = write_config(dir.path(), TVN);
    let out = dir.path().join("run");
    let sim = Command::new(bin)
        .args(["simulate", "--seed", "4,5", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(sim.status.success());
    let summary = fs::read_to_string(out.join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 1 + 2 + 1);
    let rep = Command::new(bin).arg("report").arg("--out").arg(&out).output().unwrap();
    assert!(rep.status.success());
    assert!(out.join("report.csv").exists());

    let missing = Command::new(bin).args(["simulate", "--config", "/nonexistent.toml"]).output().unwrap();
    assert_eq!(missing.status.code(), Some(2));
}

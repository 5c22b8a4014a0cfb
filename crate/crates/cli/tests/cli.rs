use std::path::Path;
use std::process::Command as Process;

use dephasing_cli::{
    execute, run, Format, MethodTag, RunConfig, CLASSIFY_HEADER, EVOLVE_HEADER, RATES_HEADER,
};
use proptest::prelude::*;
use serde_json::Value;
use sha2::{Digest, Sha256};

fn config(s: &str) -> RunConfig {
    RunConfig::from_args(s.split_whitespace()).unwrap()
}

fn body(s: &str) -> String {
    execute(&config(s)).unwrap().body
}

fn json(s: &str) -> Value {
    serde_json::from_str(&body(s)).unwrap()
}

fn csv_rows(s: &str) -> (String, Vec<Vec<f64>>) {
    let b = body(s);
    let mut lines = b.lines();
    let header = lines.next().unwrap().to_string();
    let rows = lines
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    (header, rows)
}

fn sha_of(path: &Path) -> Vec<u8> {
    Sha256::digest(std::fs::read(path).unwrap()).to_vec()
}

#[test]
fn evolve_csv_matches_closed_form() {
    let (header, rows) =
        csv_rows("evolve --x 0.5,0.5,0 --method analytic --t-max 5 --steps 100 --rho0 bloch:1,0,0 --out csv");
    assert_eq!(header, EVOLVE_HEADER);
    assert_eq!(rows.len(), 101);
    for r in &rows {
        let e = (-2.0 * r[0]).exp();
        let expect = [0.5 * (1.0 + e), 0.25 * (1.0 - e), 0.25 * (1.0 - e), 0.0];
        for k in 0..4 {
            assert!((r[1 + k] - expect[k]).abs() < 1e-12);
        }
        // λ1 = x1 + (1 − x1) e^{−2t}
        assert!((r[5] - (0.5 + 0.5 * e)).abs() < 1e-12);
        assert!(r[6].abs() < 1e-15 && r[7].abs() < 1e-15);
    }
}

#[test]
fn rates_csv_is_enm() {
    let (header, rows) = csv_rows("rates --x 0.5,0.5,0 --t-max 3");
    assert_eq!(header, RATES_HEADER);
    for r in &rows {
        assert!((r[1] - 1.0).abs() < 1e-10);
        assert!((r[2] - 1.0).abs() < 1e-10);
        assert!((r[3] + r[0].tanh()).abs() < 1e-10);
    }
}

#[test]
fn area_monte_carlo_json() {
    let v = json("area --method monte-carlo --samples 1000000 --seed 7");
    let f = v["results"]["non_cp_divisible_fraction"].as_f64().unwrap();
    assert!((f - 0.87).abs() < 0.005, "{f}");
    let q = json("area")["results"]["non_cp_divisible_fraction"].as_f64().unwrap();
    assert!((q - 0.8694063620).abs() < 1e-8);
}

#[test]
fn json_top_level_keys() {
    for cmd in [
        "evolve --format json --steps 3",
        "rates --format json --steps 3",
        "classify --format json --steps 3 --samples 20",
        "triangle --format json --steps 1 --resolution 4",
        "area --samples 10000 --method mc",
        "embed --format json --steps 2",
        "compare --format json --steps 2",
    ] {
        let v = json(cmd);
        let keys: Vec<&String> = v.as_object().unwrap().keys().collect();
        assert_eq!(keys, ["config", "results", "version"], "{cmd}");
        assert_eq!(v["version"], "1");
        let cfg: RunConfig = serde_json::from_value(v["config"].clone()).unwrap();
        assert_eq!(cfg, config(cmd));
    }
}

#[test]
fn golden_csv_headers() {
    let first = |s: &str| body(s).lines().next().unwrap().to_string();
    assert_eq!(first("evolve --steps 2"), "t,p0,p1,p2,p3,b1,b2,b3");
    assert_eq!(first("rates --steps 2"), "t,gamma1,gamma2,gamma3,mu1,mu2,mu3");
    assert_eq!(first("triangle --steps 1 --resolution 3"), "x1,x2,x3,t,status");
    assert_eq!(first("classify --steps 2 --samples 10"), CLASSIFY_HEADER);
    assert_eq!(CLASSIFY_HEADER, "t,cpt,cp_div,p_div,blp,geometric");
    assert_eq!(first("jump-sim --steps 2 --samples 100"), EVOLVE_HEADER);
    assert_eq!(
        first("embed --steps 2"),
        "t,b1,b2,b3,ancilla_drift,ancilla_coherence,pt_min_eigenvalue"
    );
    assert_eq!(first("compare --steps 2"), "t,distance,tolerance,pass");
    assert_eq!(
        first("area --format csv"),
        "method,non_cp_divisible_fraction,cp_divisible_fraction,stderr"
    );
}

#[test]
fn triangle_statuses() {
    let b = body("triangle --t-max 2 --steps 1 --resolution 4");
    let rows: Vec<&str> = b.lines().skip(1).collect();
    // 15 barycentric points at t = 0 and t = 2
    assert_eq!(rows.len(), 30);
    assert!(rows[..15].iter().all(|r| r.ends_with(",all-nonneg")));
    assert!(rows.iter().any(|r| r.contains("-negative")));
}

#[test]
fn classify_enm() {
    let v = json("classify --x 0.5,0.5 --t-max 2 --steps 20 --samples 50 --format json");
    let r = &v["results"];
    assert_eq!(r["cpt"], true);
    assert_eq!(r["p_divisible"], true);
    assert_eq!(r["blp_monotone"], true);
    assert_eq!(r["cp_divisible"], false);
    assert_eq!(r["first_negative_rate"]["gamma"], 3);
}

#[test]
fn compare_deterministic_pairs() {
    for (against, extra) in [
        ("ode", ""),
        ("classical-propagator", ""),
        ("volterra", "--steps 5000"),
    ] {
        let v = json(&format!(
            "compare --x 0.5,0.5,0 --method analytic --against {against} {extra} --format json"
        ));
        let r = &v["results"];
        assert!(r["max_distance"].as_f64().unwrap() < 1e-6, "{against}: {r}");
        assert_eq!(r["pass"], true);
    }
    let v = json("compare --x 0.2,0.3,0.5 --method analytic --against embed --format json");
    assert!(v["results"]["max_distance"].as_f64().unwrap() < 1e-9);
    assert!(v["results"]["points"][0]["tolerance"].as_f64().unwrap() == 1e-9);
}

#[test]
fn compare_monte_carlo_within_three_sigma() {
    let v = json("compare --method analytic --against jump-sim --samples 100000 --steps 10 --seed 3 --format json");
    assert_eq!(v["results"]["pass"], true);
    let v = json("compare --x 0.6,0.3,0.1 --method random-unitary --against analytic --samples 100000 --steps 10 --seed 4 --format json");
    assert_eq!(v["results"]["pass"], true);
}

#[test]
fn compare_detects_half_rate_kernel_mismatch() {
    let v = json("compare --x 0.6,0.3,0.1 --method analytic --against volterra-paper --steps 500 --format json");
    assert_eq!(v["results"]["pass"], false);
    assert!(v["results"]["max_distance"].as_f64().unwrap() > 1e-2);
}

#[test]
fn violate_enm_and_vertex() {
    let v = json("violate --x 0.5,0.5,0 --samples 16");
    assert_eq!(v["results"]["violated"], true);
    assert!(v["results"]["max_derivative"].as_f64().unwrap() > 1e-6);
    let v = json("violate --x 1,0,0 --samples 16");
    assert_eq!(v["results"]["violated"], false);
}

#[test]
fn exit_codes() {
    assert_eq!(run(["evolve", "--x", "0.5,0.6,0"]), 2);
    assert_eq!(run(["evolve", "--x", "0.5"]), 2);
    assert_eq!(run(["evolve", "--unknown-flag"]), 2);
    assert_eq!(run(["frobnicate"]), 2);
    assert_eq!(run(["evolve", "--out", ""]), 2);
    assert_eq!(run(["evolve", "--out", "/definitely/missing/dir/out.csv"]), 2);
    assert_eq!(run(["area", "--method", "monte-carlo", "--samples", "10"]), 2);
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("rates.csv");
    assert_eq!(run(["rates", "--steps", "3", "--out", p.to_str().unwrap()]), 0);
    assert!(std::fs::read_to_string(&p).unwrap().starts_with(RATES_HEADER));
}

#[test]
fn identical_arguments_give_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    for (i, cmd) in [
        "jump-sim --x 0.6,0.3,0.1 --samples 5000 --steps 20 --seed 11",
        "evolve --method random-unitary --directions gaussian --x 0.6,0.3,0.1 --samples 3000 --steps 5 --seed 5 --format json",
        "jump-sim --method extended-jump --samples 2000 --steps 5 --seed 9",
        "area --method monte-carlo --samples 20000 --seed 1",
        "classify --steps 10 --samples 30 --seed 2",
    ]
    .iter()
    .enumerate()
    {
        let mut hashes = Vec::new();
        let p = dir.path().join(format!("{i}.out"));
        for _ in 0..2 {
            let _ = std::fs::remove_file(&p);
            let mut args: Vec<String> = cmd.split_whitespace().map(String::from).collect();
            args.extend(["--out".into(), p.display().to_string()]);
            assert_eq!(run(&args), 0, "{cmd}");
            hashes.push(sha_of(&p));
        }
        assert_eq!(hashes[0], hashes[1], "{cmd}");
    }
}

#[test]
fn seed_changes_monte_carlo_output() {
    let a = body("jump-sim --samples 2000 --steps 5 --seed 1");
    let b = body("jump-sim --samples 2000 --steps 5 --seed 2");
    assert_ne!(a, b);
}

#[test]
fn binary_writes_stdout_and_help() {
    let exe = env!("CARGO_BIN_EXE_dephasing");
    let out = Process::new(exe)
        .args(["rates", "--steps", "2", "--out", "csv"])
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8(out.stdout).unwrap().starts_with(RATES_HEADER));
    let help = Process::new(exe).arg("--help").output().unwrap();
    assert!(help.status.success());
    assert!(String::from_utf8(help.stdout).unwrap().contains("units of the dephasing rate"));
    let bad = Process::new(exe).args(["evolve", "--x", "1,1,1"]).output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
}

fn method_strategy() -> impl Strategy<Value = MethodTag> {
    prop::sample::select(
        MethodTag::ALL
            .iter()
            .copied()
            .filter(|m| m.is_trajectory())
            .collect::<Vec<_>>(),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn run_config_round_trips(
        a in 0.0f64..1.0,
        frac in 0.0f64..1.0,
        method in method_strategy(),
        against in method_strategy(),
        t_max in 0.01f64..50.0,
        steps in 1usize..10_000,
        b in prop::array::uniform3(-0.57f64..0.57),
        seed in any::<u64>(),
        samples in 1usize..10_000_000,
        json_fmt in any::<bool>(),
        with_out in any::<bool>(),
    ) {
        let x2 = (1.0 - a) * frac;
        let mut args = vec![
            "compare".to_string(),
            "--x".into(), format!("{a},{x2}"),
            "--method".into(), method.name().into(),
            "--against".into(), against.name().into(),
            "--t-max".into(), t_max.to_string(),
            "--steps".into(), steps.to_string(),
            "--rho0".into(), format!("bloch:{},{},{}", b[0], b[1], b[2]),
            "--seed".into(), seed.to_string(),
            "--samples".into(), samples.to_string(),
            "--format".into(), if json_fmt { "json".into() } else { "csv".into() },
        ];
        if with_out {
            args.extend(["--out".into(), "results/run.dat".into()]);
        }
        let cfg = RunConfig::from_args(&args).unwrap();
        prop_assert_eq!(cfg.format, if json_fmt { Format::Json } else { Format::Csv });
        let again = RunConfig::from_args(cfg.to_args()).unwrap();
        prop_assert_eq!(&again, &cfg);
        let text = serde_json::to_string(&cfg).unwrap();
        prop_assert_eq!(serde_json::from_str::<RunConfig>(&text).unwrap(), cfg);
    }
}

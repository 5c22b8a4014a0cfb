//! CSV rendering. Floats use the shortest round-trip representation.

use std::fmt::Write;

use dephasing_core::analytic::RateDiagnostics;
use dephasing_core::divisibility::{TimeFlags, ViolationResult};
use dephasing_core::embeddings::EmbeddingReport;
use dephasing_core::integrators::TrajectoryRecord;
use serde_json::{json, Value};

use crate::CompareReport;

pub const EVOLVE_HEADER: &str = "t,p0,p1,p2,p3,b1,b2,b3";
pub const RATES_HEADER: &str = "t,gamma1,gamma2,gamma3,mu1,mu2,mu3";
pub const CLASSIFY_HEADER: &str = "t,cpt,cp_div,p_div,blp,geometric";
pub const AREA_HEADER: &str = "method,non_cp_divisible_fraction,cp_divisible_fraction,stderr";
pub const EMBED_HEADER: &str = "t,b1,b2,b3,ancilla_drift,ancilla_coherence,pt_min_eigenvalue";
pub const VIOLATE_HEADER: &str = "max_derivative,violated,family,s,t,evaluations";
pub const COMPARE_HEADER: &str = "t,distance,tolerance,pass";

fn join(v: &[f64]) -> String {
    v.iter().map(f64::to_string).collect::<Vec<_>>().join(",")
}

pub fn evolve_csv(rec: &TrajectoryRecord) -> String {
    let mut s = format!("{EVOLVE_HEADER}\n");
    for p in rec.points() {
        let probs = match &p.probs {
            Some(q) => join(&q.probs()),
            None => ",,,".to_string(),
        };
        let b = dephasing_core::qubit::bloch_components(p.state.matrix());
        writeln!(s, "{},{},{}", p.t, probs, join(&b)).unwrap();
    }
    s
}

pub fn trajectory_json(rec: &TrajectoryRecord) -> Value {
    let points: Vec<Value> = rec
        .points()
        .iter()
        .map(|p| {
            json!({
                "t": p.t,
                "p": p.probs.map(|q| q.probs()),
                "bloch": dephasing_core::qubit::bloch_components(p.state.matrix()),
                "bloch_stderr": p.bloch_stderr,
            })
        })
        .collect();
    json!({
        "method": rec.method,
        "seed": rec.seed,
        "samples": rec.samples,
        "points": points,
    })
}

pub fn rates_csv(rows: &[RateDiagnostics]) -> String {
    let mut s = format!("{RATES_HEADER}\n");
    for r in rows {
        writeln!(s, "{},{},{}", r.t, join(&r.gamma), join(&r.mu)).unwrap();
    }
    s
}

pub fn classify_csv(flags: &[TimeFlags]) -> String {
    let mut s = format!("{CLASSIFY_HEADER}\n");
    for f in flags {
        writeln!(
            s,
            "{},{},{},{},{},{}",
            f.t, f.cpt, f.cp_divisible, f.p_divisible, f.blp_monotone, f.geometric_markov
        )
        .unwrap();
    }
    s
}

pub fn embed_csv(rows: &[(f64, [f64; 3], EmbeddingReport)]) -> String {
    let mut s = format!("{EMBED_HEADER}\n");
    for (t, b, r) in rows {
        writeln!(
            s,
            "{},{},{},{},{}",
            t,
            join(b),
            r.ancilla_drift,
            r.ancilla_coherence,
            r.partial_transpose_min_eigenvalue
        )
        .unwrap();
    }
    s
}

pub fn violate_csv(r: &ViolationResult) -> String {
    let mut s = format!("{VIOLATE_HEADER}\n");
    match &r.witness {
        Some(w) => {
            let family = serde_json::to_value(w.family).unwrap();
            writeln!(
                s,
                "{},true,{},{},{},{}",
                r.max_derivative,
                family.as_str().unwrap_or_default(),
                w.s,
                w.t,
                r.evaluations
            )
            .unwrap();
        }
        None => writeln!(s, "{},false,,,,{}", r.max_derivative, r.evaluations).unwrap(),
    }
    s
}

pub fn compare_csv(r: &CompareReport) -> String {
    let mut s = format!("{COMPARE_HEADER}\n");
    for p in &r.points {
        writeln!(s, "{},{},{},{}", p.t, p.distance, p.tolerance, p.pass).unwrap();
    }
    s
}

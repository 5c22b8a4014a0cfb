//! Command-line front-end: every subcommand resolves a [`RunConfig`], runs
//! the library and writes one CSV or JSON artifact.
//!
//! Exit codes: 0 on success, 2 on usage or validation errors, 1 on internal
//! errors. Identical arguments give byte-identical output.

pub mod config;
mod output;

use std::io::Write;

use dephasing_core::analytic::{self, KernelConvention, MixtureRates};
use dephasing_core::divisibility::{self, ClassifyOptions, ViolationSearch};
use dephasing_core::embeddings;
use dephasing_core::integrators::{self, TimeGrid, TrajectoryRecord};
use dephasing_core::stochastic::{self, DirectionSpec, RuMode};
use dephasing_core::triangle::{self, AreaMethod};
use serde_json::{json, Value};

pub use config::{Command, Directions, Format, InitialState, MethodTag, RunConfig};
pub use output::{
    CLASSIFY_HEADER, COMPARE_HEADER, EMBED_HEADER, EVOLVE_HEADER, RATES_HEADER, VIOLATE_HEADER,
};

/// Deterministic realisations agree to this trace distance.
pub const DETERMINISTIC_TOL: f64 = 1e-6;
/// Tolerance between the closed form and the embedding.
pub const EMBEDDING_TOL: f64 = 1e-9;
/// Monte Carlo comparisons pass within this many standard errors.
pub const MC_SIGMAS: f64 = 3.0;

#[derive(Debug)]
pub enum CliError {
    Clap(clap::Error),
    Usage(String),
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Clap(e) => e.exit_code(),
            CliError::Usage(_) => 2,
            CliError::Internal(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Clap(e) => write!(f, "{e}"),
            CliError::Usage(m) => write!(f, "error: {m}"),
            CliError::Internal(m) => write!(f, "internal error: {m}"),
        }
    }
}

impl From<dephasing_core::Error> for CliError {
    fn from(e: dephasing_core::Error) -> Self {
        use dephasing_core::Error as E;
        match e {
            E::InvalidArgument(_) | E::InvalidWeights(_) | E::InvalidState(_) | E::InvalidGrid(_) => {
                CliError::Usage(e.to_string())
            }
            _ => CliError::Internal(e.to_string()),
        }
    }
}

/// Result of one invocation before it is written out.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub format: Format,
    pub body: String,
}

/// Runs the command line (without the program name) and returns the exit
/// code. Diagnostics go to stderr.
pub fn run<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let result = RunConfig::from_args(args).and_then(|cfg| {
        let artifact = execute(&cfg)?;
        write_artifact(&cfg, &artifact)
    });
    match result {
        Ok(()) => 0,
        Err(CliError::Clap(e)) => {
            let _ = e.print();
            e.exit_code()
        }
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}

fn write_artifact(cfg: &RunConfig, a: &Artifact) -> Result<(), CliError> {
    match &cfg.out {
        Some(path) => {
            if let Some(parent) = path.parent() {
                if !parent.as_os_str().is_empty() && !parent.is_dir() {
                    return Err(CliError::Usage(format!(
                        "output directory {} does not exist",
                        parent.display()
                    )));
                }
            }
            std::fs::write(path, &a.body)
                .map_err(|e| CliError::Internal(format!("writing {}: {e}", path.display())))
        }
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(a.body.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| CliError::Internal(format!("writing stdout: {e}")))
        }
    }
}

fn grid(cfg: &RunConfig) -> Result<TimeGrid, CliError> {
    Ok(TimeGrid::new(0.0, cfg.t_max, cfg.steps)?)
}

/// Runs the configured computation and renders the artifact.
pub fn execute(cfg: &RunConfig) -> Result<Artifact, CliError> {
    let (csv, results) = match cfg.command {
        Command::Evolve | Command::JumpSim => {
            let rec = trajectory(cfg, cfg.method)?;
            (output::evolve_csv(&rec), output::trajectory_json(&rec))
        }
        Command::Rates => rates(cfg)?,
        Command::Classify => classify(cfg)?,
        Command::Triangle => region(cfg)?,
        Command::Area => area(cfg)?,
        Command::Embed => embed(cfg)?,
        Command::Violate => violate(cfg)?,
        Command::Compare => compare(cfg)?,
    };
    let body = match cfg.format {
        Format::Csv => csv,
        Format::Json => {
            let doc = json!({
                "config": cfg,
                "results": results,
                "version": dephasing_core::SCHEMA_VERSION,
            });
            let mut s = serde_json::to_string_pretty(&doc)
                .map_err(|e| CliError::Internal(e.to_string()))?;
            s.push('\n');
            s
        }
    };
    Ok(Artifact {
        format: cfg.format,
        body,
    })
}

/// Trajectory of `method` on the configured grid.
pub fn trajectory(cfg: &RunConfig, method: MethodTag) -> Result<TrajectoryRecord, CliError> {
    let x = cfg.weights();
    let rho0 = cfg.rho0.density_matrix();
    let grid = grid(cfg)?;
    let rec = match method {
        MethodTag::Analytic => integrators::solve_analytic(&x, &rho0, &grid)?,
        MethodTag::TimeLocal => integrators::solve_time_local(&MixtureRates(x), &rho0, &grid)?,
        MethodTag::Volterra => integrators::solve_volterra(
            &analytic::kernel_components(&x, KernelConvention::Rederived),
            &rho0,
            &grid,
        )?,
        MethodTag::VolterraPaper => integrators::solve_volterra(
            &analytic::kernel_components(&x, KernelConvention::Paper),
            &rho0,
            &grid,
        )?,
        MethodTag::ClassicalPropagator => {
            integrators::solve_classical_propagator(&MixtureRates(x), &rho0, &grid)?
        }
        MethodTag::ClassicalMarkov => integrators::solve_classical_chain(&x, &rho0, &grid)?,
        MethodTag::Embedding => embeddings::embedded_trajectory(&x, &rho0, &grid)?,
        MethodTag::RandomUnitary => {
            let spec = match cfg.directions {
                Directions::Discrete => DirectionSpec::DiscreteAxes(x),
                Directions::Gaussian => DirectionSpec::GaussianAnisotropic(x),
                Directions::Sphere => DirectionSpec::UniformSphere,
            };
            stochastic::ru_ensemble(&rho0, &spec, &grid, cfg.samples, cfg.seed, RuMode::ExactPhase)?
        }
        MethodTag::Jump => stochastic::jump_ensemble(&x, &rho0, &grid, cfg.samples, cfg.seed)?,
        MethodTag::ExtendedJump => {
            stochastic::simulate_extended_jumps(&x, &rho0, &grid, cfg.samples, cfg.seed)?
        }
        MethodTag::PaperQuadrature | MethodTag::MonteCarlo => {
            return Err(CliError::Usage(format!("{method} is not an evolution method")))
        }
    };
    Ok(rec)
}

fn rates(cfg: &RunConfig) -> Result<(String, Value), CliError> {
    let x = cfg.weights();
    let rows = grid(cfg)?
        .times()
        .into_iter()
        .map(|t| analytic::rates(&x, t))
        .collect::<dephasing_core::Result<Vec<_>>>()?;
    Ok((output::rates_csv(&rows), json!({ "points": rows })))
}

fn classify(cfg: &RunConfig) -> Result<(String, Value), CliError> {
    let opts = ClassifyOptions {
        blp_pairs: cfg.samples,
        seed: cfg.seed,
    };
    let report = divisibility::classify_with(&cfg.weights(), &grid(cfg)?, &opts)?;
    let first = report
        .first_negative_rate
        .map(|(k, t)| json!({ "gamma": k + 1, "t": t }));
    let results = json!({
        "points": report.flags,
        "first_negative_rate": first,
        "cpt": report.all(|f| f.cpt),
        "cp_divisible": report.all(|f| f.cp_divisible),
        "p_divisible": report.all(|f| f.p_divisible),
        "blp_monotone": report.all(|f| f.blp_monotone),
    });
    Ok((output::classify_csv(&report.flags), results))
}

fn region(cfg: &RunConfig) -> Result<(String, Value), CliError> {
    let mut cells = Vec::new();
    for t in grid(cfg)?.times() {
        cells.extend(triangle::region_grid(t, cfg.resolution)?);
    }
    let mut csv = Vec::new();
    triangle::write_region_csv(&cells, &mut csv).map_err(|e| CliError::Internal(e.to_string()))?;
    let csv = String::from_utf8(csv).map_err(|e| CliError::Internal(e.to_string()))?;
    Ok((csv, json!({ "resolution": cfg.resolution, "cells": cells })))
}

fn area(cfg: &RunConfig) -> Result<(String, Value), CliError> {
    let method = match cfg.method {
        MethodTag::MonteCarlo => AreaMethod::MonteCarlo {
            samples: cfg.samples,
            seed: cfg.seed,
        },
        _ => AreaMethod::PaperQuadrature,
    };
    let est = triangle::area_fraction(method)?;
    let csv = format!(
        "{}\n{},{},{},{}\n",
        output::AREA_HEADER,
        cfg.method,
        est.non_cp_divisible_fraction,
        est.cp_divisible_fraction,
        est.stderr
    );
    let results = json!({
        "method": cfg.method,
        "non_cp_divisible_fraction": est.non_cp_divisible_fraction,
        "cp_divisible_fraction": est.cp_divisible_fraction,
        "stderr": est.stderr,
    });
    Ok((csv, results))
}

fn embed(cfg: &RunConfig) -> Result<(String, Value), CliError> {
    let x = cfg.weights();
    let rho0 = cfg.rho0.density_matrix();
    let mut rows = Vec::new();
    for t in grid(cfg)?.times() {
        let e = embeddings::evolve_embedded(&rho0, &x, t)?;
        rows.push((t, e.system.to_bloch()?.components(), e.report));
    }
    let max_drift = rows.iter().map(|r| r.2.ancilla_drift).fold(0.0, f64::max);
    let max_coherence = rows.iter().map(|r| r.2.ancilla_coherence).fold(0.0, f64::max);
    let min_pt = rows
        .iter()
        .map(|r| r.2.partial_transpose_min_eigenvalue)
        .fold(f64::INFINITY, f64::min);
    let results = json!({
        "points": rows.iter().map(|(t, b, r)| json!({ "t": t, "bloch": b, "report": r })).collect::<Vec<_>>(),
        "max_ancilla_drift": max_drift,
        "max_ancilla_coherence": max_coherence,
        "min_partial_transpose_eigenvalue": min_pt,
    });
    Ok((output::embed_csv(&rows), results))
}

fn violate(cfg: &RunConfig) -> Result<(String, Value), CliError> {
    let search = ViolationSearch {
        samples: cfg.samples,
        seed: cfg.seed,
        ..ViolationSearch::default()
    };
    let r = divisibility::two_qubit_violation(&cfg.weights(), &search)?;
    let violated = r.witness.is_some();
    let witness = r.witness.as_ref().map(|w| {
        json!({ "family": w.family, "s": w.s, "t": w.t, "derivative": w.derivative })
    });
    let csv = output::violate_csv(&r);
    let results = json!({
        "max_derivative": r.max_derivative,
        "violated": violated,
        "tolerance": divisibility::VIOLATION_TOL,
        "evaluations": r.evaluations,
        "witness": witness,
    });
    Ok((csv, results))
}

/// Per-time comparison of two realisations.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ComparePoint {
    pub t: f64,
    pub distance: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct CompareReport {
    pub method_a: MethodTag,
    pub method_b: MethodTag,
    pub points: Vec<ComparePoint>,
    pub max_distance: f64,
    pub pass: bool,
}

/// Trace distance between two records on the same grid. Deterministic pairs
/// use a fixed tolerance; otherwise the bound is `3σ` of the Bloch
/// difference, `½·3·sqrt(Σ_k σ_k²)`.
pub fn compare_records(a: &TrajectoryRecord, b: &TrajectoryRecord, ma: MethodTag, mb: MethodTag) -> Result<CompareReport, CliError> {
    if a.len() != b.len() {
        return Err(CliError::Internal("records on different grids".into()));
    }
    let fixed = if [ma, mb].contains(&MethodTag::Analytic) && [ma, mb].contains(&MethodTag::Embedding) {
        EMBEDDING_TOL
    } else {
        DETERMINISTIC_TOL
    };
    let mut points = Vec::with_capacity(a.len());
    for (pa, pb) in a.points().iter().zip(b.points()) {
        if (pa.t - pb.t).abs() > 1e-12 {
            return Err(CliError::Internal(format!("grid mismatch at t = {}", pa.t)));
        }
        let distance = pa.state.trace_distance(&pb.state)?;
        let tolerance = if ma.is_stochastic() || mb.is_stochastic() {
            let var: f64 = (0..3)
                .map(|k| {
                    let sa = pa.bloch_stderr.map_or(0.0, |s| s[k]);
                    let sb = pb.bloch_stderr.map_or(0.0, |s| s[k]);
                    sa * sa + sb * sb
                })
                .sum();
            0.5 * MC_SIGMAS * var.sqrt() + 1e-12
        } else {
            fixed
        };
        points.push(ComparePoint {
            t: pa.t,
            distance,
            tolerance,
            pass: distance <= tolerance,
        });
    }
    let max_distance = points.iter().map(|p| p.distance).fold(0.0, f64::max);
    let pass = points.iter().all(|p| p.pass);
    Ok(CompareReport {
        method_a: ma,
        method_b: mb,
        points,
        max_distance,
        pass,
    })
}

fn compare(cfg: &RunConfig) -> Result<(String, Value), CliError> {
    let mb = cfg.against.unwrap_or(MethodTag::TimeLocal);
    let a = trajectory(cfg, cfg.method)?;
    let b = trajectory(cfg, mb)?;
    let report = compare_records(&a, &b, cfg.method, mb)?;
    let results = serde_json::to_value(&report).map_err(|e| CliError::Internal(e.to_string()))?;
    Ok((output::compare_csv(&report), results))
}

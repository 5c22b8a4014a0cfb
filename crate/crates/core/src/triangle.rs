//! The parameter triangle: where rates turn negative, when, and how much of
//! the simplex stays CP-divisible forever.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::analytic::{self, RateDiagnostics};
use crate::divisibility::NEGATIVE_RATE_TOL;
use crate::quad::adaptive_simpson;
use crate::qubit::MixtureWeights;
use crate::stochastic::rng::parallel_moments;
use crate::{Error, Result};

/// Upper end `√5 − 2` of the area integral.
pub fn area_integral_limit() -> f64 {
    5f64.sqrt() - 2.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RegionStatus {
    AllNonneg,
    /// Rate `γ_{k+1}` is negative (index `k` is zero based).
    GammaNegative(usize),
    /// More than one negative rate; never produced by the mixture family.
    SeveralNegative,
}

impl RegionStatus {
    pub fn from_rates(r: &RateDiagnostics) -> Self {
        match r.negative_indices(NEGATIVE_RATE_TOL).as_slice() {
            [] => RegionStatus::AllNonneg,
            [k] => RegionStatus::GammaNegative(*k),
            _ => RegionStatus::SeveralNegative,
        }
    }

    pub fn label(&self) -> String {
        match self {
            RegionStatus::AllNonneg => "all-nonneg".into(),
            RegionStatus::GammaNegative(k) => format!("gamma{}-negative", k + 1),
            RegionStatus::SeveralNegative => "several-negative".into(),
        }
    }
}

impl Serialize for RegionStatus {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegionCell {
    pub x: MixtureWeights,
    pub t: f64,
    pub status: RegionStatus,
}

/// Points `(i, j, k)/n` with `i + j + k = n`, in lexicographic order.
pub fn barycentric_grid(resolution: usize) -> Result<Vec<MixtureWeights>> {
    if resolution < 2 {
        return Err(Error::InvalidArgument(format!(
            "resolution must be at least 2, got {resolution}"
        )));
    }
    let n = resolution as f64;
    let mut out = Vec::with_capacity((resolution + 1) * (resolution + 2) / 2);
    for i in 0..=resolution {
        for j in 0..=resolution - i {
            let k = resolution - i - j;
            out.push(MixtureWeights::new([i as f64 / n, j as f64 / n, k as f64 / n])?);
        }
    }
    Ok(out)
}

pub fn region_grid(t: f64, resolution: usize) -> Result<Vec<RegionCell>> {
    if t.is_nan() || t < 0.0 {
        return Err(Error::NegativeTime(t));
    }
    let pts = barycentric_grid(resolution)?;
    pts.into_par_iter()
        .map(|x| {
            Ok(RegionCell {
                x,
                t,
                status: RegionStatus::from_rates(&analytic::rates(&x, t)?),
            })
        })
        .collect()
}

/// Whether all rates stay nonnegative for all times.
///
/// For large `t`, `e^{2t} γ_i → 1/x_j + 1/x_k − 1/x_i − 1`, so interior points
/// qualify iff that is nonnegative for every `i`. Vertices are semigroups;
/// on an edge the rate of the missing direction is negative for all `t > 0`.
pub fn asymptotic_cp_divisible(x: &MixtureWeights) -> bool {
    if x.is_vertex() {
        return true;
    }
    if x.is_edge() {
        return false;
    }
    (0..3).all(|i| asymptotic_coefficient(x, i) >= 0.0)
}

/// `lim e^{2t} γ_i(t) = 1/x_j + 1/x_k − 1/x_i − 1` for interior `x`.
pub fn asymptotic_coefficient(x: &MixtureWeights, i: usize) -> f64 {
    let (j, k) = ((i + 1) % 3, (i + 2) % 3);
    1.0 / x.get(j) + 1.0 / x.get(k) - 1.0 / x.get(i) - 1.0
}

const ONSET_TOL: f64 = 1e-10;
const ONSET_MAX_T: f64 = 350.0;

/// Time after which one rate is negative for ever, `None` if no rate ever
/// turns negative.
pub fn onset_time(x: &MixtureWeights) -> Result<Option<f64>> {
    if asymptotic_cp_divisible(x) {
        return Ok(None);
    }
    if x.is_edge() {
        return Ok(Some(0.0));
    }
    let i = (0..3)
        .find(|&i| asymptotic_coefficient(x, i) < 0.0)
        .expect("some coefficient is negative outside the asymptotic area");
    let g = |t: f64| analytic::rates(x, t).map(|r| r.gamma[i]);
    let mut lo = 0.0;
    let mut hi = 1.0;
    while g(hi)? >= 0.0 {
        lo = hi;
        hi *= 2.0;
        if hi > ONSET_MAX_T {
            return Err(Error::InvalidArgument(format!(
                "onset beyond t = {ONSET_MAX_T} for {:?}",
                x.as_array()
            )));
        }
    }
    while hi - lo > ONSET_TOL {
        let mid = 0.5 * (lo + hi);
        if g(mid)? >= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Some(0.5 * (lo + hi)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "method", rename_all = "kebab-case")]
pub enum AreaMethod {
    /// Adaptive quadrature of the one-dimensional area integral.
    PaperQuadrature,
    /// Fraction of uniform simplex samples outside the asymptotic area.
    MonteCarlo { samples: usize, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AreaEstimate {
    pub non_cp_divisible_fraction: f64,
    pub cp_divisible_fraction: f64,
    /// Standard error (zero for quadrature).
    pub stderr: f64,
}

/// Integrand `6(3 − 3x − 3x² − x³)x / (√(1 − 4x/(1 − x²)) (1 − x²)(1 + x))`.
pub fn area_integrand(x: f64) -> f64 {
    let q = 1.0 - x * x;
    6.0 * (3.0 - 3.0 * x - 3.0 * x * x - x * x * x) * x
        / ((1.0 - 4.0 * x / q).sqrt() * q * (1.0 + x))
}

/// `2v · area_integrand(a − v²)`, finite at `v = 0`: the substitution
/// `x = a − v²` removes the inverse square root at the endpoint `x = a`.
pub fn substituted_area_integrand(v: f64) -> f64 {
    let x = area_integral_limit() - v * v;
    let q = 1.0 - x * x;
    let num = 6.0 * (3.0 - 3.0 * x - 3.0 * x * x - x * x * x) * x;
    // 1 − x² − 4x = (a − x)(x + 2 + √5), so √(1 − 4x/q) = v √((x + 2 + √5)/q)
    let c = ((x + 2.0 + 5f64.sqrt()) / q).sqrt();
    2.0 * num / (c * q * (1.0 + x))
}

pub fn area_fraction(method: AreaMethod) -> Result<AreaEstimate> {
    let (frac, stderr) = match method {
        AreaMethod::PaperQuadrature => {
            let a = area_integral_limit();
            (adaptive_simpson(substituted_area_integrand, 0.0, a.sqrt(), 1e-13), 0.0)
        }
        AreaMethod::MonteCarlo { samples, seed } => {
            if samples < 10_000 {
                return Err(Error::InvalidArgument(format!(
                    "need at least 10000 samples, got {samples}"
                )));
            }
            let m = parallel_moments(seed, samples, 1, |rng, _, out| {
                let x = MixtureWeights::sample_uniform(rng);
                out[0] = if asymptotic_cp_divisible(&x) { 0.0 } else { 1.0 };
            });
            (m.mean(0), m.stderr(0))
        }
    };
    Ok(AreaEstimate {
        non_cp_divisible_fraction: frac,
        cp_divisible_fraction: 1.0 - frac,
        stderr,
    })
}

/// A point of the asymptotic-area boundary, both in the coordinates where it
/// is the cubic `x²y + x − y = 0` and in barycentric coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundaryPoint {
    pub newton_x: f64,
    pub newton_y: f64,
    pub weights: MixtureWeights,
    /// Index of the rate that vanishes asymptotically on this piece.
    pub rate_index: usize,
}

/// Parametric samples of the boundary.
///
/// With `x = x_i` and `y = x_j x_k / (x_j + x_k)²`, the condition
/// `1/x_j + 1/x_k − 1/x_i = 1` reads `y = x / (1 − x²)`; for each `x` in
/// `[0, √5 − 2]` the two solutions are
/// `x_{j,k} = (1 − x)/2 · (1 ± √(1 − 4y))`.
pub fn newton_cubic_boundary(samples: usize) -> Result<Vec<BoundaryPoint>> {
    if samples < 2 {
        return Err(Error::InvalidArgument("need at least two samples".into()));
    }
    let a = area_integral_limit();
    let mut out = Vec::with_capacity(6 * samples);
    for i in 0..3 {
        let (j, k) = ((i + 1) % 3, (i + 2) % 3);
        for sign in [1.0, -1.0] {
            for m in 0..samples {
                let x = a * m as f64 / (samples - 1) as f64;
                let y = x / (1.0 - x * x);
                let r = (1.0 - 4.0 * y).max(0.0).sqrt();
                let mut w = [0.0; 3];
                w[i] = x;
                w[j] = 0.5 * (1.0 - x) * (1.0 + sign * r);
                w[k] = 0.5 * (1.0 - x) * (1.0 - sign * r);
                out.push(BoundaryPoint {
                    newton_x: x,
                    newton_y: y,
                    weights: MixtureWeights::with_tolerance(w, 1e-12)?,
                    rate_index: i,
                });
            }
        }
    }
    Ok(out)
}

pub const REGION_CSV_HEADER: &str = "x1,x2,x3,t,status";

pub fn write_region_csv<W: Write>(cells: &[RegionCell], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{REGION_CSV_HEADER}")?;
    for c in cells {
        let [a, b, d] = c.x.as_array();
        writeln!(out, "{a},{b},{d},{},{}", c.t, c.status.label())?;
    }
    Ok(())
}

/// Violation counts for the seven rate properties over a grid of weights
/// and times (a count of zero means the property holds everywhere).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct RatePropertyReport {
    pub cells: usize,
    pub times: usize,
    /// (i) `γ_k(0) = 2 x_k`.
    pub initial_value: usize,
    /// (ii) at most one negative rate.
    pub at_most_one_negative: usize,
    /// (iii) a negative rate stays negative.
    pub permanence: usize,
    /// (iv) vertices have constant rates `(2, 0, 0)` up to permutation.
    pub vertex_semigroup: usize,
    /// (v) on an edge the missing rate is negative for all `t > 0`.
    pub edge_negative: usize,
    /// (vi) outside the asymptotic area some rate is negative after the
    /// onset time and nonnegative before; inside, rates stay nonnegative.
    pub onset: usize,
    /// (vii) pairwise sums `γ_i + γ_j ≥ 0`.
    pub pairwise_sums: usize,
}

impl RatePropertyReport {
    pub fn total_violations(&self) -> usize {
        self.initial_value
            + self.at_most_one_negative
            + self.permanence
            + self.vertex_semigroup
            + self.edge_negative
            + self.onset
            + self.pairwise_sums
    }

    fn merge(mut self, o: Self) -> Self {
        self.cells += o.cells;
        self.initial_value += o.initial_value;
        self.at_most_one_negative += o.at_most_one_negative;
        self.permanence += o.permanence;
        self.vertex_semigroup += o.vertex_semigroup;
        self.edge_negative += o.edge_negative;
        self.onset += o.onset;
        self.pairwise_sums += o.pairwise_sums;
        self
    }
}

fn check_cell(x: &MixtureWeights, times: &[f64]) -> Result<RatePropertyReport> {
    let tol = NEGATIVE_RATE_TOL;
    let mut r = RatePropertyReport {
        cells: 1,
        ..Default::default()
    };
    let g0 = analytic::rates(x, 0.0)?.gamma;
    if (0..3).any(|k| (g0[k] - 2.0 * x.get(k)).abs() > 1e-12) {
        r.initial_value += 1;
    }
    let onset = onset_time(x)?;
    let mut negative_seen = [false; 3];
    for &t in times {
        let g = analytic::rates(x, t)?.gamma;
        let neg: Vec<usize> = (0..3).filter(|&k| g[k] < -tol).collect();
        if neg.len() > 1 {
            r.at_most_one_negative += 1;
        }
        for k in 0..3 {
            if negative_seen[k] && g[k] >= -tol && g[k] > 0.0 {
                r.permanence += 1;
            }
            if g[k] < -tol {
                negative_seen[k] = true;
            }
        }
        if x.is_vertex() {
            let ok = (0..3).all(|k| {
                let expect = if x.get(k) == 1.0 { 2.0 } else { 0.0 };
                (g[k] - expect).abs() < 1e-12
            });
            if !ok {
                r.vertex_semigroup += 1;
            }
        }
        if x.is_edge() && t > 0.0 {
            let k = (0..3).find(|&k| x.get(k) == 0.0).expect("edge has a zero weight");
            if !(g[k] < 0.0) {
                r.edge_negative += 1;
            }
        }
        if !x.is_edge() {
            let any_neg = !neg.is_empty();
            let bad = match onset {
                None => any_neg,
                // rates within the bisection tolerance of the root are ambiguous
                Some(ts) => {
                    (t > ts + 1e-9 && g.iter().all(|&v| v >= 0.0))
                        || (t < ts - 1e-9 && g.iter().any(|&v| v < 0.0))
                }
            };
            if bad {
                r.onset += 1;
            }
        }
        if (0..3).any(|i| g[i] + g[(i + 1) % 3] < -tol) {
            r.pairwise_sums += 1;
        }
    }
    Ok(r)
}

/// Checks the seven rate properties on a barycentric grid at the given times.
pub fn check_rate_properties(resolution: usize, times: &[f64]) -> Result<RatePropertyReport> {
    let pts = barycentric_grid(resolution)?;
    let mut sorted = times.to_vec();
    sorted.sort_by(f64::total_cmp);
    let parts: Vec<Result<RatePropertyReport>> =
        pts.par_iter().map(|x| check_cell(x, &sorted)).collect();
    let mut total = RatePropertyReport {
        times: sorted.len(),
        ..Default::default()
    };
    for p in parts {
        total = total.merge(p?);
    }
    Ok(total)
}

//! Deterministic solvers for the master equations of the dephasing family.
//!
//! All qubit equations here are diagonal on the Bloch components, so the
//! solvers integrate the three Bloch eigenvalues `λ_k(t)` (starting from one)
//! and rebuild the state as `b_k(t) = λ_k(t) b_k(0)`.

use nalgebra::{Matrix3, Matrix4, Vector3, Vector4};
use serde::Serialize;

use crate::analytic::{self, KernelComponents, RateSchedule};
use crate::quad::adaptive_simpson_vec;
use crate::qubit::{hadamard4, BlochVector, DensityMatrix, MixtureWeights, PauliChannelProbs};
use crate::{Error, Result};

/// Absolute tolerance for the integrated rates `Γ_k(t)`.
pub const RATE_INTEGRAL_TOL: f64 = 1e-10;

/// Uniform grid `t0, t0 + h, …, t1` with `h = (t1 − t0) / steps`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TimeGrid {
    t0: f64,
    t1: f64,
    steps: usize,
}

impl TimeGrid {
    pub fn new(t0: f64, t1: f64, steps: usize) -> Result<Self> {
        if !(t0.is_finite() && t1.is_finite()) || t0 < 0.0 || t1 <= t0 {
            return Err(Error::InvalidGrid(format!(
                "need 0 <= t0 < t1, got [{t0}, {t1}]"
            )));
        }
        if steps == 0 {
            return Err(Error::InvalidGrid("steps must be positive".into()));
        }
        Ok(Self { t0, t1, steps })
    }

    /// Grid from zero to `t1` with spacing as close as possible to `h`.
    pub fn with_step(t1: f64, h: f64) -> Result<Self> {
        if !(h > 0.0) {
            return Err(Error::InvalidGrid(format!("step must be positive, got {h}")));
        }
        Self::new(0.0, t1, ((t1 / h).round() as usize).max(1))
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn t1(&self) -> f64 {
        self.t1
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn h(&self) -> f64 {
        (self.t1 - self.t0) / self.steps as f64
    }

    pub fn time(&self, n: usize) -> f64 {
        if n == self.steps {
            self.t1
        } else {
            self.t0 + (self.t1 - self.t0) * n as f64 / self.steps as f64
        }
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.steps).map(|n| self.time(n)).collect()
    }

    pub fn len(&self) -> usize {
        self.steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Which realisation produced a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Analytic,
    TimeLocal,
    Volterra,
    ClassicalPropagator,
    ClassicalMarkov,
    Embedding,
    RandomUnitary,
    JumpProcess,
    ExtendedJump,
}

impl Method {
    pub fn is_stochastic(&self) -> bool {
        matches!(
            self,
            Method::RandomUnitary | Method::JumpProcess | Method::ExtendedJump
        )
    }

    pub fn name(&self) -> &'static str {
        match self {
            Method::Analytic => "analytic",
            Method::TimeLocal => "time-local",
            Method::Volterra => "volterra",
            Method::ClassicalPropagator => "classical-propagator",
            Method::ClassicalMarkov => "classical-markov",
            Method::Embedding => "embedding",
            Method::RandomUnitary => "random-unitary",
            Method::JumpProcess => "jump-process",
            Method::ExtendedJump => "extended-jump",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryPoint {
    pub t: f64,
    pub state: DensityMatrix,
    pub probs: Option<PauliChannelProbs>,
    /// Standard errors of the Bloch components for Monte Carlo estimates.
    pub bloch_stderr: Option<[f64; 3]>,
}

/// Time-ordered states from one realisation.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub method: Method,
    pub seed: Option<u64>,
    pub samples: Option<usize>,
    points: Vec<TrajectoryPoint>,
}

impl TrajectoryRecord {
    pub fn new(method: Method) -> Self {
        Self {
            method,
            seed: None,
            samples: None,
            points: Vec::new(),
        }
    }

    pub fn with_sampling(mut self, seed: u64, samples: usize) -> Self {
        self.seed = Some(seed);
        self.samples = Some(samples);
        self
    }

    pub fn push(&mut self, point: TrajectoryPoint) -> Result<()> {
        if let Some(last) = self.points.last() {
            if point.t <= last.t {
                return Err(Error::InvalidGrid(format!(
                    "times must increase strictly: {} after {}",
                    point.t, last.t
                )));
            }
        }
        self.points.push(point);
        Ok(())
    }

    pub fn points(&self) -> &[TrajectoryPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn last(&self) -> Option<&TrajectoryPoint> {
        self.points.last()
    }
}

fn qubit_bloch(rho0: &DensityMatrix) -> Result<[f64; 3]> {
    Ok(rho0.to_bloch()?.components())
}

/// Largest negative channel probability attributed to discretisation error.
pub const PROB_CLIP_TOL: f64 = 1e-6;

/// Channel with Bloch eigenvalues `lambda`; entries down to `−PROB_CLIP_TOL`
/// are clipped to zero, anything more negative yields `None`.
pub fn probs_from_numerical_lambdas(lambda: [f64; 3]) -> Option<PauliChannelProbs> {
    let p = probs_from_lambdas(lambda);
    if p.iter().any(|v| !v.is_finite() || *v < -PROB_CLIP_TOL) {
        return None;
    }
    let clipped = p.map(|v| v.max(0.0));
    let s: f64 = clipped.iter().sum();
    PauliChannelProbs::new(clipped.map(|v| v / s)).ok()
}

/// State and channel with Bloch eigenvalues `lambda`, applied to `b0`.
fn point_from_lambdas(t: f64, b0: &[f64; 3], lambda: [f64; 3]) -> Result<TrajectoryPoint> {
    let b = std::array::from_fn(|k| lambda[k] * b0[k]);
    Ok(TrajectoryPoint {
        t,
        state: DensityMatrix::from_bloch(&BlochVector::new(b)?),
        probs: probs_from_numerical_lambdas(lambda),
        bloch_stderr: None,
    })
}

/// Closed-form trajectory on a grid.
pub fn solve_analytic(
    x: &MixtureWeights,
    rho0: &DensityMatrix,
    grid: &TimeGrid,
) -> Result<TrajectoryRecord> {
    let mut rec = TrajectoryRecord::new(Method::Analytic);
    for t in grid.times() {
        let p = analytic::channel_probs(x, t)?;
        rec.push(TrajectoryPoint {
            t,
            state: p.apply(rho0)?,
            probs: Some(p),
            bloch_stderr: None,
        })?;
    }
    Ok(rec)
}

/// Fourth-order Runge–Kutta solution of `ρ̇ = ½ Σ γ_k(t)(σ_k ρ σ_k − ρ)`.
///
/// On the Bloch components this reads `ḃ_i = −(γ_j + γ_k) b_i`.
pub fn solve_time_local(
    rates: &impl RateSchedule,
    rho0: &DensityMatrix,
    grid: &TimeGrid,
) -> Result<TrajectoryRecord> {
    let b0 = qubit_bloch(rho0)?;
    let decay = |t: f64| -> Result<Vector3<f64>> {
        let r = rates.rates_at(t);
        if !r.is_finite() {
            return Err(Error::NonFiniteRate(t));
        }
        let g = r.gamma;
        Ok(Vector3::new(-(g[1] + g[2]), -(g[0] + g[2]), -(g[0] + g[1])))
    };

    let h = grid.h();
    let mut lambda = Vector3::new(1.0, 1.0, 1.0);
    let mut rec = TrajectoryRecord::new(Method::TimeLocal);
    rec.push(point_from_lambdas(grid.t0(), &b0, lambda.into())?)?;
    for n in 0..grid.steps() {
        let t = grid.time(n);
        let k1 = decay(t)?.component_mul(&lambda);
        let mid = decay(t + 0.5 * h)?;
        let k2 = mid.component_mul(&(lambda + k1 * (0.5 * h)));
        let k3 = mid.component_mul(&(lambda + k2 * (0.5 * h)));
        let k4 = decay(t + h)?.component_mul(&(lambda + k3 * h));
        lambda += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        rec.push(point_from_lambdas(grid.time(n + 1), &b0, lambda.into())?)?;
    }
    Ok(rec)
}

/// Solves `ρ̇(t) = ∫_0^t K(t − s) ρ(s) ds` for a kernel with a `δ` part.
///
/// The `δ` part acts as an instantaneous generator and is integrated exactly
/// through an integrating factor; the smooth part is a trapezoidal sum over
/// the stored history, and the step is the implicit exponential trapezoidal
/// rule, solved in closed form since each Bloch component is scalar. The
/// method is second order in the step size and exact for local kernels.
pub fn solve_volterra(
    kernel: &KernelComponents,
    rho0: &DensityMatrix,
    grid: &TimeGrid,
) -> Result<TrajectoryRecord> {
    let b0 = qubit_bloch(rho0)?;
    let finite = kernel
        .local_weights
        .iter()
        .chain(&kernel.memory_amplitude)
        .chain(&kernel.memory_decay)
        .all(|v| v.is_finite());
    if !finite {
        return Err(Error::InvalidArgument("non-finite kernel component".into()));
    }
    if grid.t0() != 0.0 {
        return Err(Error::InvalidGrid(
            "the memory integral starts at t = 0; grid must start there".into(),
        ));
    }
    let n = grid.steps();
    let h = grid.h();

    let mut lambdas: [Vec<f64>; 3] = Default::default();
    for (i, lam) in lambdas.iter_mut().enumerate() {
        let local = kernel.bloch_local_rate(i);
        let mem: Vec<f64> = (0..=n).map(|m| kernel.bloch_memory(i, m as f64 * h)).collect();
        *lam = volterra_component(local, &mem, h, n);
    }

    let mut rec = TrajectoryRecord::new(Method::Volterra);
    for m in 0..=n {
        let lambda = [lambdas[0][m], lambdas[1][m], lambdas[2][m]];
        rec.push(point_from_lambdas(grid.time(m), &b0, lambda)?)?;
    }
    Ok(rec)
}

/// `y' = −a y + ∫_0^t M(t − s) y(s) ds`, `y(0) = 1`, with `mem[m] = M(m h)`.
fn volterra_component(local: f64, mem: &[f64], h: f64, n: usize) -> Vec<f64> {
    let mut y = vec![0.0; n + 1];
    y[0] = 1.0;
    // trapezoidal history integral at t_m without the s = t_m endpoint
    let history = |y: &[f64], m: usize| -> f64 {
        if m == 0 {
            return 0.0;
        }
        let inner: f64 = (1..m).map(|l| mem[m - l] * y[l]).sum();
        h * (0.5 * mem[m] * y[0] + inner)
    };
    let decay = (-local * h).exp();
    let denom = 1.0 - 0.25 * h * h * mem[0];
    let mut r_prev = 0.0;
    for m in 0..n {
        let r = history(&y, m + 1);
        y[m + 1] = (decay * (y[m] + 0.5 * h * r_prev) + 0.5 * h * r) / denom;
        r_prev = r + 0.5 * h * mem[0] * y[m + 1];
    }
    y
}

/// Generator of the classical four-state chain with rates `0 → k: x_k`,
/// `k → 0: 1`.
pub fn classical_generator(x: &MixtureWeights) -> Matrix4<f64> {
    let [x1, x2, x3] = x.as_array();
    Matrix4::new(
        -1.0, 1.0, 1.0, 1.0, //
        x1, -1.0, 0.0, 0.0, //
        x2, 0.0, -1.0, 0.0, //
        x3, 0.0, 0.0, -1.0,
    )
}

fn check_probability_vector(p: &[f64]) -> Result<()> {
    if p.iter().any(|v| !v.is_finite() || *v < -1e-12) {
        return Err(Error::InvalidProbabilities(format!("{p:?}")));
    }
    let s: f64 = p.iter().sum();
    if (s - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidProbabilities(format!("{p:?} sums to {s}")));
    }
    Ok(())
}

/// Exact solution `exp(tA) p0` of the classical chain.
pub fn solve_classical_markov(x: &MixtureWeights, p0: [f64; 4], t: f64) -> Result<[f64; 4]> {
    check_probability_vector(&p0)?;
    if t.is_nan() || t < 0.0 {
        return Err(Error::NegativeTime(t));
    }
    let p = (classical_generator(x) * t).exp() * Vector4::from(p0);
    Ok(p.into())
}

/// Generator of the (possibly negative-rate) equation for the Pauli
/// probabilities of `ρ̇ = ½ Σ γ_k(σ_k ρ σ_k − ρ)`.
pub fn pauli_probability_generator(r: &analytic::RateDiagnostics) -> Matrix4<f64> {
    let [g1, g2, g3] = r.gamma;
    let g0 = r.gamma0;
    Matrix4::new(
        -g0, g1, g2, g3, //
        g1, -g0, g3, g2, //
        g2, g3, -g0, g1, //
        g3, g2, g1, -g0,
    ) * 0.5
}

/// `Γ_k(t) = ∫_0^t γ_k(u) du` by adaptive Simpson quadrature.
pub fn integrated_rates(rates: &impl RateSchedule, t: f64) -> Result<[f64; 3]> {
    if t.is_nan() || t < 0.0 {
        return Err(Error::NegativeTime(t));
    }
    let g = adaptive_simpson_vec(|u| rates.rates_at(u).gamma, 0.0, t, RATE_INTEGRAL_TOL);
    if g.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteRate(t));
    }
    Ok(g)
}

fn propagator_from_integrals(g: [f64; 3]) -> Matrix4<f64> {
    let d = [
        1.0,
        (-g[1] - g[2]).exp(),
        (-g[0] - g[2]).exp(),
        (-g[0] - g[1]).exp(),
    ];
    let h = Matrix4::new(
        1.0, 1.0, 1.0, 1.0, //
        1.0, 1.0, -1.0, -1.0, //
        1.0, -1.0, 1.0, -1.0, //
        1.0, -1.0, -1.0, 1.0,
    );
    h * Matrix4::from_diagonal(&Vector4::from(d)) * h * 0.25
}

/// Propagator `T(t)` of the Pauli-probability equation.
///
/// The generators at different times commute: all of them are diagonalised
/// by the Klein four-group character table `H`, with eigenvalues
/// `(0, −(γ2+γ3), −(γ1+γ3), −(γ1+γ2))`. Hence
/// `T(t) = ¼ H diag(1, e^{−Γ2−Γ3}, e^{−Γ1−Γ3}, e^{−Γ1−Γ2}) H`.
pub fn classical_propagator(rates: &impl RateSchedule, t: f64) -> Result<Matrix4<f64>> {
    Ok(propagator_from_integrals(integrated_rates(rates, t)?))
}

/// Intermediate propagator `T(t, s)` with `T(t) = T(t, s) T(s)`.
pub fn classical_propagator_between(
    rates: &impl RateSchedule,
    s: f64,
    t: f64,
) -> Result<Matrix4<f64>> {
    if !(s <= t) {
        return Err(Error::InvalidArgument(format!("need s <= t, got s={s}, t={t}")));
    }
    let gs = integrated_rates(rates, s)?;
    let g = adaptive_simpson_vec(|u| rates.rates_at(u).gamma, s, t, RATE_INTEGRAL_TOL);
    if g.iter().any(|v| !v.is_finite()) || gs.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteRate(t));
    }
    Ok(propagator_from_integrals(g))
}

/// Result of pushing an arbitrary initial vector through the negative-rate
/// classical equation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PropagatedProbabilities {
    pub p: [f64; 4],
    /// Some entry went below `−1e-12`: not a probability vector any more.
    pub leaves_simplex: bool,
}

/// Evolves `p_s`, given at time `s`, to time `t`. Initial vectors other than
/// the channel probabilities at `s` may leave the simplex; that is reported
/// rather than rejected.
pub fn propagate_probabilities(
    rates: &impl RateSchedule,
    p_s: [f64; 4],
    s: f64,
    t: f64,
) -> Result<PropagatedProbabilities> {
    check_probability_vector(&p_s)?;
    let p: [f64; 4] = (classical_propagator_between(rates, s, t)? * Vector4::from(p_s)).into();
    Ok(PropagatedProbabilities {
        p,
        leaves_simplex: p.iter().any(|&v| v < -1e-12),
    })
}

/// Trajectory obtained from the propagator applied to `(1, 0, 0, 0)`.
pub fn solve_classical_propagator(
    rates: &impl RateSchedule,
    rho0: &DensityMatrix,
    grid: &TimeGrid,
) -> Result<TrajectoryRecord> {
    let mut rec = TrajectoryRecord::new(Method::ClassicalPropagator);
    for t in grid.times() {
        let p: [f64; 4] = classical_propagator(rates, t)?.column(0).into();
        let p = PauliChannelProbs::new(p)?;
        rec.push(TrajectoryPoint {
            t,
            state: p.apply(rho0)?,
            probs: Some(p),
            bloch_stderr: None,
        })?;
    }
    Ok(rec)
}

/// Trajectory from the positive-rate classical chain started in state 0.
pub fn solve_classical_chain(
    x: &MixtureWeights,
    rho0: &DensityMatrix,
    grid: &TimeGrid,
) -> Result<TrajectoryRecord> {
    let mut rec = TrajectoryRecord::new(Method::ClassicalMarkov);
    for t in grid.times() {
        let p = PauliChannelProbs::new(solve_classical_markov(x, [1.0, 0.0, 0.0, 0.0], t)?)?;
        rec.push(TrajectoryPoint {
            t,
            state: p.apply(rho0)?,
            probs: Some(p),
            bloch_stderr: None,
        })?;
    }
    Ok(rec)
}

/// Three-state chain for weights `(½, ½, 0)`: the four-state chain with the
/// never-populated state 3 removed.
pub fn simplified_chain_generator() -> Matrix3<f64> {
    Matrix3::new(
        -1.0, 1.0, 1.0, //
        0.5, -1.0, 0.0, //
        0.5, 0.0, -1.0,
    )
}

pub fn solve_simplified_chain(p0: [f64; 3], t: f64) -> Result<[f64; 3]> {
    check_probability_vector(&p0)?;
    if t.is_nan() || t < 0.0 {
        return Err(Error::NegativeTime(t));
    }
    Ok(((simplified_chain_generator() * t).exp() * Vector3::from(p0)).into())
}

/// Pauli probabilities from Bloch eigenvalues, without validation.
pub fn probs_from_lambdas(lambda: [f64; 3]) -> [f64; 4] {
    hadamard4([1.0, lambda[0], lambda[1], lambda[2]]).map(|v| 0.25 * v)
}

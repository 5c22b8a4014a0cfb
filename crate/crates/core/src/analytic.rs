//! Closed-form description of the dephasing mixture.
//!
//! With weights `x = (x1, x2, x3)` the map is the Pauli channel with
//! probabilities `p0 = ½(1 + e^{−2t})`, `p_k = ½ x_k (1 − e^{−2t})`, i.e. its
//! Bloch eigenvalues are `λ_k(t) = x_k + (1 − x_k) e^{−2t}`. The time-local
//! generator has the rates
//!
//! ```text
//! γ_i = μ_i − μ_j − μ_k,   μ_k = −(x_i + x_j) / (x_i + x_j + e^{2t} x_k),
//! ```
//!
//! where `μ_k = ½ d/dt ln λ_k`. Time is measured in units of the dephasing
//! rate, so a single Cartesian semigroup damps coherences as `e^{−2t}`.

use num_complex::Complex64;
use serde::Serialize;

use crate::qubit::{pauli_along, DensityMatrix, MixtureWeights, PauliChannelProbs};
use crate::{Error, Result};

/// Tolerance used by [`cpt_holds`].
pub const CPT_TOL: f64 = 1e-12;

/// Bloch eigenvalues `(λ1, λ2, λ3)` at time `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LambdaTriple {
    pub t: f64,
    pub lambda: [f64; 3],
}

/// Time-local rates at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateDiagnostics {
    pub t: f64,
    pub mu: [f64; 3],
    pub gamma: [f64; 3],
    /// `γ1 + γ2 + γ3`
    pub gamma0: f64,
}

impl RateDiagnostics {
    /// Diagnostics for given rates, with `μ_i = −½(γ_j + γ_k)`.
    pub fn from_gammas(t: f64, gamma: [f64; 3]) -> Self {
        let mu = std::array::from_fn(|i| -0.5 * (gamma[(i + 1) % 3] + gamma[(i + 2) % 3]));
        Self {
            t,
            mu,
            gamma,
            gamma0: gamma.iter().sum(),
        }
    }

    fn from_mus(t: f64, mu: [f64; 3]) -> Self {
        let gamma = [
            mu[0] - mu[1] - mu[2],
            -mu[0] + mu[1] - mu[2],
            -mu[0] - mu[1] + mu[2],
        ];
        Self {
            t,
            mu,
            gamma,
            gamma0: gamma.iter().sum(),
        }
    }

    /// Index of the rates below `−tol`.
    pub fn negative_indices(&self, tol: f64) -> Vec<usize> {
        (0..3).filter(|&k| self.gamma[k] < -tol).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.gamma.iter().chain(self.mu.iter()).all(|v| v.is_finite())
    }
}

fn check_time(t: f64) -> Result<()> {
    if t.is_nan() || t < 0.0 {
        return Err(Error::NegativeTime(t));
    }
    Ok(())
}

pub fn lambdas(x: &MixtureWeights, t: f64) -> Result<LambdaTriple> {
    check_time(t)?;
    let e = (-2.0 * t).exp();
    Ok(LambdaTriple {
        t,
        lambda: std::array::from_fn(|k| x.get(k) + (1.0 - x.get(k)) * e),
    })
}

pub fn channel_probs(x: &MixtureWeights, t: f64) -> Result<PauliChannelProbs> {
    check_time(t)?;
    let e = (-2.0 * t).exp();
    let q = 0.5 * (1.0 - e);
    PauliChannelProbs::new([0.5 * (1.0 + e), x.get(0) * q, x.get(1) * q, x.get(2) * q])
}

/// `Λ_t[ρ0]` for a qubit state.
pub fn evolve(x: &MixtureWeights, rho0: &DensityMatrix, t: f64) -> Result<DensityMatrix> {
    channel_probs(x, t)?.apply(rho0)
}

pub fn rates(x: &MixtureWeights, t: f64) -> Result<RateDiagnostics> {
    check_time(t)?;
    Ok(mixture_rates(x, t))
}

fn mixture_rates(x: &MixtureWeights, t: f64) -> RateDiagnostics {
    let e2t = (2.0 * t).exp();
    let mu = std::array::from_fn(|k| {
        let xk = x.get(k);
        let rest = x.get((k + 1) % 3) + x.get((k + 2) % 3);
        if xk == 0.0 {
            // exact value, also avoids 0·∞ once e^{2t} overflows
            -1.0
        } else {
            -rest / (rest + e2t * xk)
        }
    });
    RateDiagnostics::from_mus(t, mu)
}

/// The eternally non-Markovian rates `(1, 1, −tanh t)`.
pub fn enm_rates(t: f64) -> Result<RateDiagnostics> {
    check_time(t)?;
    let m = -1.0 / (1.0 + (2.0 * t).exp());
    let gamma = [1.0, 1.0, -t.tanh()];
    Ok(RateDiagnostics {
        t,
        mu: [m, m, -1.0],
        gamma,
        gamma0: 2.0 - t.tanh(),
    })
}

/// Solution of `ρ̇ = σ_α ρ σ_α − ρ` with `σ_α = n·σ`.
pub fn dephasing_solution(rho0: &DensityMatrix, axis: [f64; 3], t: f64) -> Result<DensityMatrix> {
    check_time(t)?;
    if rho0.dim() != 2 {
        return Err(Error::DimensionMismatch(format!(
            "dephasing of a {}-dimensional state",
            rho0.dim()
        )));
    }
    let norm = axis.iter().map(|v| v * v).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidArgument(format!(
            "dephasing axis must be a unit vector, |n| = {norm}"
        )));
    }
    let s = pauli_along(axis);
    let e = (-2.0 * t).exp();
    let m = rho0.matrix() * Complex64::new(0.5 * (1.0 + e), 0.0)
        + (&s * rho0.matrix() * &s) * Complex64::new(0.5 * (1.0 - e), 0.0);
    DensityMatrix::new(m)
}

/// `λ_i + λ_j ≤ 1 + λ_k` for all cyclic permutations.
pub fn cpt_holds(l: &LambdaTriple) -> bool {
    let [a, b, c] = l.lambda;
    a + b <= 1.0 + c + CPT_TOL && b + c <= 1.0 + a + CPT_TOL && c + a <= 1.0 + b + CPT_TOL
}

/// Which time normalisation a memory kernel follows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum KernelConvention {
    /// Local weights `x_k` and `X_k(t) = x_k(1 − x_k) e^{−x_k t}`. This matches
    /// a dephasing generator with coherence decay `e^{−t}` and therefore runs
    /// the dynamics at half speed relative to [`channel_probs`].
    Paper,
    /// Obtained from the Laplace transform of `λ_k(t)`: local weights `2x_k`
    /// and `X_k(t) = 4x_k(1 − x_k) e^{−2x_k t}`.
    Rederived,
}

/// Memory kernel `K(t)ρ = ½ Σ_k K_k(t)(σ_k ρ σ_k − ρ)` with
/// `K_k(t) = w_k δ(t) + η_k(t)` and `η_i = ½(X_i − X_j − X_k)`.
///
/// Every `X_k` is a single exponential `a_k e^{−c_k t}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KernelComponents {
    pub convention: KernelConvention,
    pub local_weights: [f64; 3],
    pub memory_amplitude: [f64; 3],
    pub memory_decay: [f64; 3],
}

impl KernelComponents {
    /// `X_k(t)`.
    pub fn memory(&self, k: usize, t: f64) -> f64 {
        self.memory_amplitude[k] * (-self.memory_decay[k] * t).exp()
    }

    /// `η_k(t)`.
    pub fn eta(&self, k: usize, t: f64) -> f64 {
        let (i, j) = ((k + 1) % 3, (k + 2) % 3);
        0.5 * (self.memory(k, t) - self.memory(i, t) - self.memory(j, t))
    }

    /// Instantaneous decay rate `w_j + w_k` of Bloch component `i`.
    pub fn bloch_local_rate(&self, i: usize) -> f64 {
        self.local_weights[(i + 1) % 3] + self.local_weights[(i + 2) % 3]
    }

    /// Memory kernel `−(η_j + η_k)(t)` acting on Bloch component `i`:
    /// `ḃ_i(t) = −(w_j + w_k) b_i(t) + ∫_0^t M_i(t − s) b_i(s) ds`.
    pub fn bloch_memory(&self, i: usize, t: f64) -> f64 {
        -(self.eta((i + 1) % 3, t) + self.eta((i + 2) % 3, t))
    }

    pub fn is_purely_local(&self) -> bool {
        self.memory_amplitude.iter().all(|&a| a == 0.0)
    }
}

pub fn kernel_components(x: &MixtureWeights, convention: KernelConvention) -> KernelComponents {
    let xs = x.as_array();
    let scale = match convention {
        KernelConvention::Paper => 1.0,
        KernelConvention::Rederived => 2.0,
    };
    KernelComponents {
        convention,
        local_weights: xs.map(|v| scale * v),
        memory_amplitude: xs.map(|v| scale * scale * v * (1.0 - v)),
        memory_decay: xs.map(|v| scale * v),
    }
}

/// Time-dependent rates of a qubit master equation of Pauli form.
pub trait RateSchedule: Sync {
    fn rates_at(&self, t: f64) -> RateDiagnostics;
}

impl<F: Fn(f64) -> RateDiagnostics + Sync> RateSchedule for F {
    fn rates_at(&self, t: f64) -> RateDiagnostics {
        self(t)
    }
}

/// Rates of the mixture with the given weights.
#[derive(Debug, Clone, Copy)]
pub struct MixtureRates(pub MixtureWeights);

impl RateSchedule for MixtureRates {
    fn rates_at(&self, t: f64) -> RateDiagnostics {
        mixture_rates(&self.0, t)
    }
}

/// `(1, 1, −tanh t)`.
#[derive(Debug, Clone, Copy)]
pub struct EnmRates;

impl RateSchedule for EnmRates {
    fn rates_at(&self, t: f64) -> RateDiagnostics {
        let m = -1.0 / (1.0 + (2.0 * t).exp());
        RateDiagnostics {
            t,
            mu: [m, m, -1.0],
            gamma: [1.0, 1.0, -t.tanh()],
            gamma0: 2.0 - t.tanh(),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ConstantRates(pub [f64; 3]);

impl RateSchedule for ConstantRates {
    fn rates_at(&self, t: f64) -> RateDiagnostics {
        RateDiagnostics::from_gammas(t, self.0)
    }
}

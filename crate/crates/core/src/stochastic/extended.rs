//! Jump process on four mutually orthogonal states of a qubit plus three
//! ancilla qubits (`C^2 ⊗ C^8`).
//!
//! With `ρ0 = Σ_i p_i |φ_i⟩⟨φ_i|`, the states are
//! `|Ψ_0⟩ = Σ_i √p_i |φ_i⟩|ψ_i⟩` and `|Ψ_k⟩ = (σ_k ⊗ U_k)|Ψ_0⟩`, where `ψ_j`
//! is the computational basis of `C^8` and `U_k` swaps `ψ_i ↔ ψ_{2k+i}`.

use num_complex::Complex64;
use serde::Serialize;

use super::jump::gillespie;
use super::random_unitary::state_from_mean_bloch;
use super::rng::parallel_moments;
use crate::integrators::{Method, TimeGrid, TrajectoryPoint, TrajectoryRecord};
use crate::qubit::{
    bloch_components, hermitian_eigh, kron, pauli, CMatrix, CVector, DensityMatrix,
    MixtureWeights,
};
use crate::{Error, Result};

pub const ANCILLA_DIM: usize = 8;
pub const EXTENDED_DIM: usize = 2 * ANCILLA_DIM;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExtendedStateReport {
    /// Largest `|⟨Ψ_i|Ψ_j⟩ − δ_ij|`.
    pub orthonormality_error: f64,
    /// Largest entrywise error of `Tr_anc |Ψ_k⟩⟨Ψ_k| − σ_k ρ0 σ_k`.
    pub reduced_state_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedJumpStates {
    pub states: [CVector; 4],
    /// `σ_k ⊗ U_k` on `C^16` (identity for `k = 0`).
    pub jump_operators: [CMatrix; 4],
    pub report: ExtendedStateReport,
}

/// Permutation matrix of the involution swapping `i ↔ 2k + i`, `i ∈ {0, 1}`.
pub fn ancilla_unitary(k: usize) -> CMatrix {
    block_swap(ANCILLA_DIM, 2, k)
}

/// Permutation on `C^dim` swapping `i ↔ block·k + i` for `i < block`.
pub(crate) fn block_swap(dim: usize, block: usize, k: usize) -> CMatrix {
    let mut perm: Vec<usize> = (0..dim).collect();
    if k > 0 {
        for i in 0..block {
            perm.swap(i, block * k + i);
        }
    }
    let mut m = CMatrix::zeros(dim, dim);
    for (from, &to) in perm.iter().enumerate() {
        m[(to, from)] = Complex64::new(1.0, 0.0);
    }
    m
}

/// Reduced density matrix of the first factor of a pure state on `C^a ⊗ C^b`.
pub fn reduce_first(psi: &CVector, a: usize) -> CMatrix {
    let b = psi.len() / a;
    let mut rho = CMatrix::zeros(a, a);
    for i in 0..a {
        for j in 0..a {
            let mut s = Complex64::new(0.0, 0.0);
            for m in 0..b {
                s += psi[i * b + m] * psi[j * b + m].conj();
            }
            rho[(i, j)] = s;
        }
    }
    rho
}

/// Largest `|⟨v_i|v_j⟩ − δ_ij|`.
pub fn orthonormality_error(vs: &[CVector]) -> f64 {
    let mut err: f64 = 0.0;
    for (i, a) in vs.iter().enumerate() {
        for (j, b) in vs.iter().enumerate() {
            let target = if i == j { 1.0 } else { 0.0 };
            err = err.max((a.dotc(b) - Complex64::new(target, 0.0)).norm());
        }
    }
    err
}

pub fn extended_jump_states(rho0: &DensityMatrix) -> Result<ExtendedJumpStates> {
    if rho0.dim() != 2 {
        return Err(Error::DimensionMismatch(format!(
            "expected a qubit state, got dimension {}",
            rho0.dim()
        )));
    }
    let (p, phi) = hermitian_eigh(rho0.matrix());
    let mut psi0 = CVector::zeros(EXTENDED_DIM);
    for i in 0..2 {
        let amp = Complex64::new(p[i].max(0.0).sqrt(), 0.0);
        for a in 0..2 {
            psi0[a * ANCILLA_DIM + i] += amp * phi[(a, i)];
        }
    }
    let jump_operators: [CMatrix; 4] = std::array::from_fn(|k| kron(&pauli(k), &ancilla_unitary(k)));
    let states: [CVector; 4] = std::array::from_fn(|k| &jump_operators[k] * &psi0);

    let mut reduced_state_error: f64 = 0.0;
    for (k, s) in states.iter().enumerate() {
        let target = pauli(k) * rho0.matrix() * pauli(k);
        let diff = reduce_first(s, 2) - target;
        reduced_state_error = diff.iter().map(|z| z.norm()).fold(reduced_state_error, f64::max);
    }
    let report = ExtendedStateReport {
        orthonormality_error: orthonormality_error(&states),
        reduced_state_error,
    };
    Ok(ExtendedJumpStates {
        states,
        jump_operators,
        report,
    })
}

/// Jump trajectories in `C^16`: a jump `0 → k` applies `σ_k ⊗ U_k`, the jump
/// back applies its inverse (the same operator). The recorded state is the
/// ensemble average of the reduced qubit state.
pub fn simulate_extended_jumps(
    x: &MixtureWeights,
    rho0: &DensityMatrix,
    grid: &TimeGrid,
    n_runs: usize,
    seed: u64,
) -> Result<TrajectoryRecord> {
    if n_runs == 0 {
        return Err(Error::InvalidArgument("need at least one run".into()));
    }
    let ext = extended_jump_states(rho0)?;
    let times = grid.times();
    let moments = parallel_moments(seed, n_runs, 3 * times.len(), |rng, _, out| {
        let events = gillespie(x, grid.t1(), rng).expect("validated end time");
        let mut psi = ext.states[0].clone();
        let mut next = 0;
        for (m, &t) in times.iter().enumerate() {
            while next < events.len() && events[next].time <= t {
                let e = events[next];
                let k = e.from.max(e.to);
                psi = &ext.jump_operators[k] * &psi;
                next += 1;
            }
            let b = bloch_components(&reduce_first(&psi, 2));
            out[3 * m..3 * m + 3].copy_from_slice(&b);
        }
    });
    let mut rec = TrajectoryRecord::new(Method::ExtendedJump).with_sampling(seed, n_runs);
    for (m, &t) in times.iter().enumerate() {
        let b: [f64; 3] = std::array::from_fn(|k| moments.mean(3 * m + k));
        rec.push(TrajectoryPoint {
            t,
            state: state_from_mean_bloch(b)?,
            probs: None,
            bloch_stderr: Some(std::array::from_fn(|k| moments.stderr(3 * m + k))),
        })?;
    }
    Ok(rec)
}

//! Time-independent GKSL dynamics on larger spaces whose reduced dynamics is
//! the mixture map, and the orthogonal jump states of the two-qubit case.
//!
//! The ancilla is a classical register `C^3` with projectors `P_k`; the
//! jump operators `σ_k ⊗ P_k` satisfy `Σ_k L_k†L_k = 𝟙`, so the generator
//! `Σ_k (L_k ρ L_k − ½{L_k†L_k, ρ})` equals `Σ_k L_k ρ L_k − ρ`.

use num_complex::Complex64;
use serde::Serialize;

use crate::analytic;
use crate::integrators::{Method, TimeGrid, TrajectoryPoint, TrajectoryRecord};
use crate::qubit::{
    hermitian_eigenvalues, hermitian_eigh, kron, partial_trace_matrix, pauli, projector,
    trace_norm, CMatrix, CVector, DensityMatrix, MixtureWeights,
};
use crate::stochastic::extended::{block_swap, orthonormality_error};
use crate::superop::Superoperator;
use crate::{Error, Result};

pub const ANCILLA_LEVELS: usize = 3;
/// Residual above which the six-qubit construction is rejected.
pub const CONSTRAINT_TOL: f64 = 1e-8;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn check_qubit(rho: &DensityMatrix) -> Result<()> {
    if rho.dim() != 2 {
        return Err(Error::DimensionMismatch(format!(
            "expected a qubit state, got dimension {}",
            rho.dim()
        )));
    }
    Ok(())
}

fn check_time(t: f64) -> Result<()> {
    if t.is_nan() || t < 0.0 {
        return Err(Error::NegativeTime(t));
    }
    Ok(())
}

/// `Σ_i ρ_i ⊗ |i⟩⟨i|` with `ρ_i` of trace `x_i`, stored as normalised
/// blocks and weights.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumClassicalState {
    blocks: Vec<(DensityMatrix, f64)>,
}

impl QuantumClassicalState {
    /// `ρ ⊗ diag(x)`.
    pub fn product(rho: &DensityMatrix, x: &MixtureWeights) -> Self {
        Self {
            blocks: (0..ANCILLA_LEVELS).map(|i| (rho.clone(), x.get(i))).collect(),
        }
    }

    pub fn blocks(&self) -> &[(DensityMatrix, f64)] {
        &self.blocks
    }

    pub fn system_dim(&self) -> usize {
        self.blocks[0].0.dim()
    }

    pub fn to_density_matrix(&self) -> DensityMatrix {
        let d = self.system_dim();
        let mut m = CMatrix::zeros(d * ANCILLA_LEVELS, d * ANCILLA_LEVELS);
        for (i, (rho, w)) in self.blocks.iter().enumerate() {
            m += kron(rho.matrix(), &projector(ANCILLA_LEVELS, i)) * c(*w);
        }
        DensityMatrix::new(m).expect("convex combination of states")
    }

    /// Splits a state on `C^d ⊗ C^3` into blocks; also returns the largest
    /// modulus of the ancilla-off-diagonal entries that are dropped.
    pub fn from_density_matrix(rho: &DensityMatrix, system_dim: usize) -> Result<(Self, f64)> {
        if rho.dim() != system_dim * ANCILLA_LEVELS {
            return Err(Error::DimensionMismatch(format!(
                "state of dimension {} on C^{system_dim} ⊗ C^3",
                rho.dim()
            )));
        }
        let m = rho.matrix();
        let n = ANCILLA_LEVELS;
        let mut coherence: f64 = 0.0;
        let mut blocks = Vec::with_capacity(n);
        for i in 0..n {
            let mut b = CMatrix::zeros(system_dim, system_dim);
            for a in 0..system_dim {
                for bb in 0..system_dim {
                    b[(a, bb)] = m[(a * n + i, bb * n + i)];
                    for j in 0..n {
                        if j != i {
                            coherence = coherence.max(m[(a * n + i, bb * n + j)].norm());
                        }
                    }
                }
            }
            let w = b.trace().re;
            let block = if w > 1e-300 {
                DensityMatrix::new(b / c(w))?
            } else {
                DensityMatrix::maximally_mixed(system_dim)
            };
            blocks.push((block, w));
        }
        Ok((Self { blocks }, coherence))
    }
}

/// Jump operators `σ_k ⊗ 𝟙_{d} ⊗ P_k` with `d` frozen levels between the
/// qubit and the register (`d = 1` for the single-qubit embedding).
pub fn embedding_jumps(frozen_dim: usize) -> Vec<CMatrix> {
    let id = CMatrix::identity(frozen_dim, frozen_dim);
    (0..ANCILLA_LEVELS)
        .map(|k| kron(&kron(&pauli(k + 1), &id), &projector(ANCILLA_LEVELS, k)))
        .collect()
}

/// GKSL generator on `C^2 ⊗ C^3`. It does not depend on the weights, which
/// enter only through the ancilla state `diag(x)`.
pub fn build_bipartite_generator() -> Superoperator {
    Superoperator::gksl(&embedding_jumps(1)).expect("non-empty jump list")
}

/// Structure of the evolved bipartite state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EmbeddingReport {
    /// Largest ancilla-off-diagonal entry.
    pub ancilla_coherence: f64,
    /// `‖ρ_E(t) − ρ_E(0)‖₁`.
    pub ancilla_drift: f64,
    /// Smallest eigenvalue of the partial transpose over the ancilla.
    pub partial_transpose_min_eigenvalue: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddedEvolution {
    pub system: DensityMatrix,
    pub ancilla: DensityMatrix,
    pub report: EmbeddingReport,
}

/// Transpose of the second factor of an operator on `C^a ⊗ C^b`.
pub fn partial_transpose_second(m: &CMatrix, a: usize, b: usize) -> CMatrix {
    let mut out = CMatrix::zeros(a * b, a * b);
    for i in 0..a {
        for j in 0..a {
            for k in 0..b {
                for l in 0..b {
                    out[(i * b + k, j * b + l)] = m[(i * b + l, j * b + k)];
                }
            }
        }
    }
    out
}

fn embedded_report(state: &CMatrix, sys: usize, x: &MixtureWeights) -> Result<EmbeddedEvolution> {
    let rho = DensityMatrix::new(state.clone())?;
    let (_, coherence) = QuantumClassicalState::from_density_matrix(&rho, sys)?;
    let system = rho.partial_trace(&[sys, ANCILLA_LEVELS], &[0])?;
    let ancilla = rho.partial_trace(&[sys, ANCILLA_LEVELS], &[1])?;
    let e0 = CMatrix::from_diagonal(&CVector::from_iterator(3, x.as_array().iter().map(|v| c(*v))));
    let drift = trace_norm(&(ancilla.matrix() - e0))?;
    let pt = partial_transpose_second(rho.matrix(), sys, ANCILLA_LEVELS);
    Ok(EmbeddedEvolution {
        system,
        ancilla,
        report: EmbeddingReport {
            ancilla_coherence: coherence,
            ancilla_drift: drift,
            partial_transpose_min_eigenvalue: hermitian_eigenvalues(&pt)[0],
        },
    })
}

/// `Tr_E e^{tL}[ρ0 ⊗ diag(x)]` together with the ancilla state.
pub fn evolve_embedded(rho0: &DensityMatrix, x: &MixtureWeights, t: f64) -> Result<EmbeddedEvolution> {
    check_qubit(rho0)?;
    check_time(t)?;
    let initial = QuantumClassicalState::product(rho0, x).to_density_matrix();
    let out = build_bipartite_generator().exp(t).apply(initial.matrix());
    embedded_report(&out, 2, x)
}

/// Embedding trajectory on a grid, stepping with `exp(hL)`.
pub fn embedded_trajectory(
    x: &MixtureWeights,
    rho0: &DensityMatrix,
    grid: &TimeGrid,
) -> Result<TrajectoryRecord> {
    check_qubit(rho0)?;
    let gen = build_bipartite_generator();
    let first = gen.exp(grid.t0());
    let step = gen.exp(grid.h());
    let mut state = first.apply(QuantumClassicalState::product(rho0, x).to_density_matrix().matrix());
    let mut rec = TrajectoryRecord::new(Method::Embedding);
    for (n, t) in grid.times().into_iter().enumerate() {
        if n > 0 {
            state = step.apply(&state);
        }
        let e = embedded_report(&state, 2, x)?;
        rec.push(TrajectoryPoint {
            t,
            state: e.system,
            probs: None,
            bloch_stderr: None,
        })?;
    }
    Ok(rec)
}

fn check_two_qubit(rho: &DensityMatrix) -> Result<()> {
    if rho.dim() != 4 {
        return Err(Error::DimensionMismatch(format!(
            "expected a two-qubit state, got dimension {}",
            rho.dim()
        )));
    }
    Ok(())
}

/// `(Λ_t ⊗ id)[ρ_AB]` from the Kraus form `Σ_j p_j (σ_j ⊗ 𝟙) ρ (σ_j ⊗ 𝟙)`.
pub fn two_qubit_map(rho_ab: &DensityMatrix, x: &MixtureWeights, t: f64) -> Result<DensityMatrix> {
    check_two_qubit(rho_ab)?;
    let p = analytic::channel_probs(x, t)?;
    DensityMatrix::new(crate::divisibility::apply_pauli_on_first(&p.probs(), rho_ab.matrix()))
}

/// The same map from the GKSL evolution on `C^2 ⊗ C^2 ⊗ C^3` with jump
/// operators `σ_k ⊗ 𝟙 ⊗ P_k`, followed by the partial trace.
pub fn two_qubit_map_gksl(
    rho_ab: &DensityMatrix,
    x: &MixtureWeights,
    t: f64,
) -> Result<DensityMatrix> {
    check_two_qubit(rho_ab)?;
    check_time(t)?;
    let gen = Superoperator::gksl(&embedding_jumps(2))?;
    let initial = QuantumClassicalState::product(rho_ab, x).to_density_matrix();
    let out = gen.exp(t).apply(initial.matrix());
    let out = partial_trace_matrix(&out, &[2, 2, ANCILLA_LEVELS], &[0, 1])?;
    DensityMatrix::new(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SixQubitReport {
    /// Largest `|⟨ξ_i|ξ_j⟩ − δ_ij|`.
    pub orthonormality_error: f64,
    /// Largest entry of `Tr_{B,C}|ξ_j⟩⟨ξ_j| − σ_j ρ_A σ_j`.
    pub reduced_a_error: f64,
    /// Largest entry of `Tr_{A,C}|ξ_j⟩⟨ξ_j| − ρ_B`.
    pub reduced_b_error: f64,
    /// Residual of the trace conditions on `a_{ikmn}` and of `a = c c†`.
    pub constraint_residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SixQubitJumpStates {
    /// `|ξ_0⟩ … |ξ_3⟩` on `C^2 ⊗ C^2 ⊗ C^16`.
    pub states: [CVector; 4],
    /// `c_{ikl}`, indexed `[i][k][l]`, in the eigenbasis `φ_i` of `ρ_A` and
    /// the computational basis `ψ_k` of `B`.
    pub coefficients: [[[Complex64; 4]; 2]; 2],
    /// Eigenvalues `p_i` of `ρ_A` (ascending) and eigenvectors as columns.
    pub eigenvalues: [f64; 2],
    pub eigenbasis: CMatrix,
    pub report: SixQubitReport,
}

pub const REGISTER_DIM: usize = 16;

fn max_entry(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Orthogonal jump states for the qubit pair, from the purification
/// `|ξ_0⟩ = Σ_l √λ_l |w_l⟩ ⊗ |χ_l⟩` of `ρ_AB = Σ_l λ_l |w_l⟩⟨w_l|`, and
/// `|ξ_j⟩ = (σ_j ⊗ 𝟙 ⊗ V_j)|ξ_0⟩` with `V_j` swapping `χ_l ↔ χ_{4j+l}`.
pub fn six_qubit_jump_states(rho_ab: &DensityMatrix) -> Result<SixQubitJumpStates> {
    check_two_qubit(rho_ab)?;
    let (lam, w) = hermitian_eigh(rho_ab.matrix());
    let rho_a = rho_ab.partial_trace(&[2, 2], &[0])?;
    let rho_b = rho_ab.partial_trace(&[2, 2], &[1])?;
    let (p, phi) = hermitian_eigh(rho_a.matrix());

    let mut xi0 = CVector::zeros(4 * REGISTER_DIM);
    for l in 0..4 {
        let amp = c(lam[l].max(0.0).sqrt());
        for ab in 0..4 {
            xi0[ab * REGISTER_DIM + l] = amp * w[(ab, l)];
        }
    }

    // c_{ikl} = ⟨φ_i ψ_k | √λ_l w_l⟩
    let mut coefficients = [[[Complex64::new(0.0, 0.0); 4]; 2]; 2];
    for (i, ci) in coefficients.iter_mut().enumerate() {
        for (k, cik) in ci.iter_mut().enumerate() {
            for (l, cikl) in cik.iter_mut().enumerate() {
                let mut s = Complex64::new(0.0, 0.0);
                for a in 0..2 {
                    s += phi[(a, i)].conj() * xi0[(a * 2 + k) * REGISTER_DIM + l];
                }
                *cikl = s;
            }
        }
    }
    // a_{ikmn} = Σ_l c_{iml} c*_{knl}
    let a = |i: usize, k: usize, m: usize, n: usize| -> Complex64 {
        (0..4).map(|l| coefficients[i][m][l] * coefficients[k][n][l].conj()).sum()
    };
    let trace_cond = |i: usize, k: usize| -> Complex64 { (0..2).map(|l| a(i, k, l, l)).sum() };
    let mut residual: f64 = 0.0;
    residual = residual.max((trace_cond(0, 0) - c(p[0])).norm());
    residual = residual.max((trace_cond(1, 1) - c(p[1])).norm());
    residual = residual.max(trace_cond(0, 1).norm());
    residual = residual.max(trace_cond(1, 0).norm());
    let mut rebuilt = CMatrix::zeros(4, 4);
    for i in 0..2 {
        for k in 0..2 {
            let fi = phi.column(i).into_owned();
            let fk = phi.column(k).into_owned();
            let outer_a = &fi * fk.adjoint();
            for m in 0..2 {
                for n in 0..2 {
                    let mut outer_b = CMatrix::zeros(2, 2);
                    outer_b[(m, n)] = c(1.0);
                    rebuilt += kron(&outer_a, &outer_b) * a(i, k, m, n);
                }
            }
        }
    }
    residual = residual.max(max_entry(&(rebuilt - rho_ab.matrix())));
    if residual > CONSTRAINT_TOL {
        return Err(Error::ConstraintResidual(residual));
    }

    let id2 = CMatrix::identity(2, 2);
    let states: [CVector; 4] = std::array::from_fn(|j| {
        let op = kron(&kron(&pauli(j), &id2), &block_swap(REGISTER_DIM, 4, j));
        &op * &xi0
    });

    let mut reduced_a_error: f64 = 0.0;
    let mut reduced_b_error: f64 = 0.0;
    for (j, s) in states.iter().enumerate() {
        let proj = s * s.adjoint();
        let ra = partial_trace_matrix(&proj, &[2, 2, REGISTER_DIM], &[0])?;
        let rb = partial_trace_matrix(&proj, &[2, 2, REGISTER_DIM], &[1])?;
        let target = pauli(j) * rho_a.matrix() * pauli(j);
        reduced_a_error = reduced_a_error.max(max_entry(&(ra - target)));
        reduced_b_error = reduced_b_error.max(max_entry(&(rb - rho_b.matrix())));
    }

    Ok(SixQubitJumpStates {
        report: SixQubitReport {
            orthonormality_error: orthonormality_error(&states),
            reduced_a_error,
            reduced_b_error,
            constraint_residual: residual,
        },
        states,
        coefficients,
        eigenvalues: [p[0], p[1]],
        eigenbasis: phi,
    })
}

//! Qubit dephasing in random directions.
//!
//! The dynamics studied here is the convex mixture of the three Cartesian
//! Pauli dephasing semigroups,
//!
//! ```text
//! Λ_t = x1·exp(t L1) + x2·exp(t L2) + x3·exp(t L3),   L_k[ρ] = σ_k ρ σ_k − ρ,
//! ```
//!
//! parametrised by a point `(x1, x2, x3)` of the probability simplex. The
//! crate realises this family in several equivalent ways and checks their
//! agreement:
//!
//! * closed-form channel probabilities, Bloch eigenvalues and time-local
//!   decoherence rates ([`analytic`]),
//! * numerical solution of the time-local and memory-kernel master equations
//!   and of the classical four-state rate equations ([`integrators`]),
//! * Monte Carlo random-unitary trajectories and classical jump processes,
//!   including the realisation with orthogonal states in an extended space
//!   ([`stochastic`]),
//! * bipartite GKSL embeddings with a frozen ancilla ([`embeddings`]).
//!
//! On top of that, [`divisibility`] classifies the family with respect to
//! CP-divisibility, P-divisibility and trace-distance monotonicity, and
//! [`triangle`] analyses where in the parameter simplex rates turn negative.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod analytic;
pub mod divisibility;
pub mod embeddings;
mod error;
pub mod integrators;
pub mod quad;
pub mod qubit;
pub mod stochastic;
pub mod superop;
pub mod triangle;

pub use error::{Error, Result};
pub use qubit::{BlochVector, CMatrix, DensityMatrix, MixtureWeights, PauliChannelProbs};

/// Version tag attached to every exported artifact.
pub const SCHEMA_VERSION: &str = "1";

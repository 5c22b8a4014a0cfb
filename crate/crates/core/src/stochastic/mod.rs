//! Monte Carlo realisations of the mixture map.

pub mod direction;
pub mod extended;
pub mod jump;
pub mod random_unitary;
pub mod rng;

pub use direction::{sample_direction, DirectionSampler, DirectionSpec};
pub use extended::{extended_jump_states, simulate_extended_jumps, ExtendedJumpStates};
pub use jump::{gillespie, jump_ensemble, occupation_times, state_at, JumpEvent};
pub use random_unitary::{ru_ensemble, ru_evolve, RuEstimate, RuMode};
pub use rng::{parallel_moments, stream_rng, Moments};

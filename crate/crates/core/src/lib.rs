//! Randomized competitive Ising-inspired (RaCI) knapsack search.
//!
//! The pipeline runs from a [`KnapsackInstance`] through its Ising
//! [`Hamiltonian`](encoder::Hamiltonian), optionally programmed onto a
//! simulated memristor crossbar, to the two-vector stochastic search in
//! [`solver`]. [`bench`] wraps everything in seeded, reproducible experiments.
//!
//! The numerical core is generic over the scalar type; the aliases below fix
//! the common choices.

pub mod bench;
pub mod crossbar;
pub mod encoder;
pub mod error;
pub mod knapsack;
pub mod num;
pub mod solver;
pub mod stats;

pub use encoder::{
    build_hamiltonian, capacity_slots, decode, default_penalties, energy_exact, exhaustive_min,
    CapacityEncoding, NeuronState,
};
pub use error::{Error, Result};
pub use knapsack::{KnapsackInstance, Selection};
pub use num::{Real, Scalar};

/// Hamiltonian with `f64` entries, the working type of the solver.
pub type Hamiltonian = encoder::Hamiltonian<f64>;
/// Hamiltonian with exact rational entries.
pub type ExactHamiltonian = encoder::Hamiltonian<num_rational::Rational64>;
pub type PenaltyWeights = encoder::PenaltyWeights<f64>;
pub type ProgrammedCrossbar = crossbar::ProgrammedCrossbar<f64>;
pub type TrialResult = solver::TrialResult<f64>;

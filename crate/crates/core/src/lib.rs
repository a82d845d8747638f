//! Repeated collisional charging of a harmonic-oscillator battery by diagonal
//! qudit fuel.
//!
//! A collision is an energy-preserving unitary (or, more generally, a set of
//! bistochastic blocks, one per total-energy shell). For diagonal fuel the
//! battery populations evolve as a Markov chain on the oscillator levels with
//! a banded transition matrix. The crate builds those matrices, evolves
//! populations and ergotropy, samples paths, and classifies the chain as
//! transient, positive-recurrent or null-recurrent.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod distribution;
pub mod error;
pub mod evolve;
pub mod experiments;
pub mod format;
pub mod markov;
pub mod rng;
pub mod sampling;
pub mod state;
pub mod transition;

pub use distribution::{
    ergotropy, geometric_distribution, mean_energy, tv_distance, BatteryDistribution, EnergyValue,
};
pub use error::{Error, Result};
pub use evolve::{
    apply_step, evolve, evolve_growing, evolve_with, sample_path, AutoGrow, ChainWalker,
    EvolveOptions, PathSample, PathStatus, SnapshotPolicy, Trajectory,
};
pub use state::{classify_state, QuditState, StateClass};
pub use transition::{
    build_transition_matrix, qubit_transition_matrix, swap_unitary_blocks,
    unistochastic_from_blocks, BistochasticBlocks, QubitSwapParams, TransitionMatrix,
    UnitaryBlocks,
};

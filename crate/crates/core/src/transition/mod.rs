//! Energy-preserving collisions and the banded transition matrices they
//! induce on battery level populations.

mod blocks;
mod matrix;
mod oracle;

pub use blocks::{
    swap_unitary_blocks, unistochastic_from_blocks, BistochasticBlocks, BlockKind,
    QubitSwapParams, UnitaryBlocks, BLOCK_TOL,
};
pub use matrix::{
    build_transition_matrix, qubit_transition_matrix, Provenance, TransitionMatrix,
    COLUMN_SUM_TOL,
};
pub use oracle::{oracle_collision_density, oracle_collision_step};

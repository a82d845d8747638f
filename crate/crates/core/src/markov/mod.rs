//! Recurrence and transience of the level chain: analytic criteria for
//! two-level fuel, Monte Carlo return-time estimation, and stationary states.

mod banded;
mod classify;
mod irreducible;
mod lyapunov;
mod report;
mod returns;
mod stationary;

pub use classify::{classify_qubit_chain, classify_qubit_chain_with, EQUAL_POPULATION_TOL};
pub use irreducible::check_irreducible;
pub use lyapunov::{
    foster_drift_check, recurrent_lyapunov_qubit, transient_lyapunov_qubit, DriftMode,
    DriftReport, LyapunovFunction, DRIFT_SLACK, RECURRENT_FLOOR,
};
pub use report::{AnalyticEvidence, ChainClass, ChainKind, EmpiricalEvidence, Evidence, RungStats};
pub use returns::{classify_empirical, estimate_return_stats, EstimationBudget, ReturnStats};
pub use stationary::{stationary_direct, stationary_distribution, stationary_distribution_from};


#[cfg(test)]
pub(crate) mod tests_support {
    use crate::state::QuditState;
    use crate::transition::{qubit_transition_matrix, QubitSwapParams, TransitionMatrix};

    /// Full-swap qubit chain with fuel `(s1, 1 - s1)` on `n` levels.
    pub(crate) fn swap(s1: f64, n: usize) -> TransitionMatrix {
        let params = QubitSwapParams::constant(1.0, n + 1).unwrap();
        qubit_transition_matrix(&params, &QuditState::qubit(s1, 1.0 - s1).unwrap(), n).unwrap()
    }
}

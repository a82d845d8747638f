//! Verdicts for the two-level fuel chain: closed-form where a criterion
//! applies, Monte Carlo otherwise.

use super::lyapunov::{
    foster_drift_check, recurrent_lyapunov_qubit, transient_lyapunov_qubit, DriftReport,
};
use super::report::{AnalyticEvidence, ChainClass, ChainKind, Evidence};
use super::returns::{classify_empirical, EstimationBudget};
use crate::error::{Error, Result};
use crate::state::QuditState;
use crate::transition::{qubit_transition_matrix, QubitSwapParams};

/// Populations closer than this are treated as equal.
pub const EQUAL_POPULATION_TOL: f64 = 1e-12;

/// Largest window over which witness drift is evaluated for the evidence
/// block.
const WITNESS_WINDOW: usize = 2000;

/// [`classify_qubit_chain_with`] using the default estimation budget.
pub fn classify_qubit_chain(params: &QubitSwapParams, xi: &QuditState) -> Result<ChainClass> {
    classify_qubit_chain_with(params, xi, &EstimationBudget::default())
}

/// * `s1 > s2`: positive-recurrent.
/// * `s1 = s2`: null-recurrent.
/// * `s1 < s2` and every `alpha = 1`: transient.
/// * `s1 < s2` otherwise: the Monte Carlo classifier decides, started at
///   level 1 on a window of `budget.truncation` levels.
pub fn classify_qubit_chain_with(
    params: &QubitSwapParams,
    xi: &QuditState,
    budget: &EstimationBudget,
) -> Result<ChainClass> {
    if xi.dim() != 2 {
        return Err(Error::Dimension(format!("need a two-level fuel, got d = {}", xi.dim())));
    }
    let (s1, s2) = (xi.s(1), xi.s(2));
    if s1 == 0.0 || s2 == 0.0 {
        return Err(Error::Reducible(format!(
            "fuel ({s1}, {s2}) moves the battery in one direction only; \
             analyse each level separately"
        )));
    }
    if params.last_shell() < 3 {
        return Err(Error::InvalidParameter("need at least alpha_2 and alpha_3".into()));
    }
    if let Some(i) = params.alphas().iter().position(|&a| a == 0.0) {
        return Err(Error::Reducible(format!(
            "alpha_{} = 0 splits the chain at level {}; classify each component separately",
            i + 2,
            i + 1
        )));
    }
    let window = (params.last_shell() - 1).min(WITNESS_WINDOW);

    if (s1 - s2).abs() <= EQUAL_POPULATION_TOL {
        let drift = recurrent_drift(params, xi, window)?;
        return Ok(analytic(ChainKind::NullRecurrent, "equal populations", window, drift, vec![
            "recurrent witness grows linearly; expected return time is infinite".into(),
        ]));
    }
    if s1 > s2 {
        let drift = recurrent_drift(params, xi, window)?;
        return Ok(analytic(
            ChainKind::PositiveRecurrent,
            "passive fuel (s1 > s2)",
            window,
            drift,
            vec![format!("stationary ratio p(k+1)/p(k) = {}", s2 / s1)],
        ));
    }
    if params.alphas().iter().all(|&a| a == 1.0) {
        let a = (s1 / s2 + 1.0) / 2.0;
        let f1 = 2.0 / (1.0 - a);
        let t = qubit_transition_matrix(params, xi, window)?;
        let f = transient_lyapunov_qubit(xi, a, f1, 1.0, window)?;
        let drift = foster_drift_check(&t, &f)?;
        return Ok(analytic(
            ChainKind::Transient,
            "active fuel under full swap",
            window,
            Some(drift),
            vec![format!("witness a = {a}, f1 = {f1}, delta1 = 1")],
        ));
    }

    let n = budget.truncation.min(params.last_shell() - 1);
    let t = qubit_transition_matrix(params, xi, n)?;
    let class = classify_empirical(&t, 1, budget)?;
    let Evidence::Empirical(empirical) = class.evidence else {
        unreachable!("empirical classifier returns empirical evidence")
    };
    Ok(ChainClass {
        kind: class.kind,
        evidence: Evidence::Escalated {
            analytic_note: "active fuel with a partial swap admits transience but does not force it"
                .into(),
            empirical,
        },
    })
}

fn recurrent_drift(
    params: &QubitSwapParams,
    xi: &QuditState,
    window: usize,
) -> Result<Option<DriftReport>> {
    if window < 2 {
        return Ok(None);
    }
    let t = qubit_transition_matrix(params, xi, window)?;
    let f = recurrent_lyapunov_qubit(params, xi, window)?;
    foster_drift_check(&t, &f).map(Some)
}

fn analytic(
    kind: ChainKind,
    rule: &str,
    window: usize,
    drift: Option<DriftReport>,
    notes: Vec<String>,
) -> ChainClass {
    ChainClass {
        kind,
        evidence: Evidence::Analytic(AnalyticEvidence {
            rule: rule.into(),
            window,
            drift,
            notes,
        }),
    }
}

//! Diagonal qudit states (the charging fuel) and their passivity class.

use crate::error::{Error, Result};

/// Tolerance used for the probability-sum check on construction.
pub const NORMALIZATION_TOL: f64 = 1e-12;

/// Default tolerance for equality and monotonicity comparisons in
/// [`classify_state`].
pub const PASSIVITY_TOL: f64 = 1e-10;

/// Populations `(s_1, ..., s_d)` of a diagonal qudit with the equally spaced
/// ladder; index 0 is the ground level.
#[derive(Debug, Clone, PartialEq)]
pub struct QuditState {
    probs: Vec<f64>,
}

impl QuditState {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.len() < 2 {
            return Err(Error::InvalidState(format!(
                "qudit dimension must be at least 2, got {}",
                probs.len()
            )));
        }
        check_probabilities(&probs)?;
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::InvalidState(format!(
                "entries sum to {total}, expected 1"
            )));
        }
        Ok(Self { probs })
    }

    /// Two-level fuel with ground population `s1` and excited population `s2`.
    pub fn qubit(s1: f64, s2: f64) -> Result<Self> {
        Self::new(vec![s1, s2])
    }

    pub fn maximally_mixed(d: usize) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidState(format!(
                "qudit dimension must be at least 2, got {d}"
            )));
        }
        Ok(Self {
            probs: vec![1.0 / d as f64; d],
        })
    }

    pub fn dim(&self) -> usize {
        self.probs.len()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Population of level `j` (1-based).
    pub fn s(&self, j: usize) -> f64 {
        self.probs[j - 1]
    }
}

pub(crate) fn check_probabilities(probs: &[f64]) -> Result<()> {
    for (i, &p) in probs.iter().enumerate() {
        if !p.is_finite() || !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidState(format!(
                "entry {i} = {p} is outside [0, 1]"
            )));
        }
    }
    Ok(())
}

/// Passivity class of a diagonal qudit state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StateClass {
    /// Some higher level is more populated than a lower one.
    Active,
    /// Populations non-increasing with energy and not all equal.
    StrictlyPassive,
    /// All populations equal.
    MaximallyMixed,
}

impl StateClass {
    pub fn label(self) -> &'static str {
        match self {
            StateClass::Active => "active",
            StateClass::StrictlyPassive => "strictly-passive",
            StateClass::MaximallyMixed => "maximally-mixed",
        }
    }

    pub fn is_passive(self) -> bool {
        !matches!(self, StateClass::Active)
    }
}

impl std::fmt::Display for StateClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for StateClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "active" => Ok(StateClass::Active),
            "strictly-passive" | "passive" => Ok(StateClass::StrictlyPassive),
            "maximally-mixed" | "mixed" => Ok(StateClass::MaximallyMixed),
            other => Err(Error::InvalidParameter(format!(
                "unknown state class '{other}'"
            ))),
        }
    }
}

/// Classifies `xi` by comparing neighbouring populations within `tol`.
///
/// Passive means occupations are non-increasing with energy, so `(0.7, 0.3)`
/// is strictly passive and `(0.3, 0.7)` is active.
pub fn classify_state(xi: &QuditState, tol: f64) -> Result<StateClass> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    let probs = xi.probs();
    let first = probs[0];
    if probs.iter().all(|&p| (p - first).abs() <= tol) {
        return Ok(StateClass::MaximallyMixed);
    }
    let monotone = probs.windows(2).all(|w| w[1] <= w[0] + tol);
    Ok(if monotone {
        StateClass::StrictlyPassive
    } else {
        StateClass::Active
    })
}

//! Foster-Lyapunov drift functions.
//!
//! Recurrence witnesses for passive qubit fuel grow geometrically, so values
//! are kept as `mantissa * 2^exponent` and the drift inequality is checked
//! in the scale-free form `sum_k T[k, m] f_k / f_m <= 1`.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::state::QuditState;
use crate::transition::{QubitSwapParams, TransitionMatrix};

/// Slack allowed in the relative drift inequality.
pub const DRIFT_SLACK: f64 = 1e-12;

/// Constant added to the recurrence witness so that `f_1 > 0`.
pub const RECURRENT_FLOOR: f64 = 1e-3;

/// Positive real with an extended exponent range.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Scaled {
    mantissa: f64,
    exp2: i32,
}

impl Scaled {
    fn new(v: f64) -> Self {
        Self { mantissa: v, exp2: 0 }.normalized()
    }

    // mantissa in [1, 2)
    fn normalized(mut self) -> Self {
        if self.mantissa == 0.0 || !self.mantissa.is_finite() {
            return self;
        }
        let shift = self.mantissa.abs().log2().floor() as i32;
        let half = shift / 2;
        self.mantissa = self.mantissa * 2f64.powi(-half) * 2f64.powi(half - shift);
        self.exp2 += shift;
        self
    }

    fn add(self, other: Self) -> Self {
        let e = self.exp2.max(other.exp2);
        let a = self.mantissa * 2f64.powi(self.exp2 - e);
        let b = other.mantissa * 2f64.powi(other.exp2 - e);
        Self { mantissa: a + b, exp2: e }.normalized()
    }

    fn scale(self, x: f64) -> Self {
        Self { mantissa: self.mantissa * x, exp2: self.exp2 }.normalized()
    }

    fn ratio(self, other: Self) -> f64 {
        (self.mantissa / other.mantissa) * 2f64.powi(self.exp2 - other.exp2)
    }

    fn ln(self) -> f64 {
        self.mantissa.ln() + self.exp2 as f64 * std::f64::consts::LN_2
    }

    fn to_f64(self) -> f64 {
        self.mantissa * 2f64.powi(self.exp2)
    }

    fn lt(self, other: Self) -> bool {
        self.ratio(other) < 1.0
    }
}

/// Strictly positive function on levels `1..=N` with a finite, non-empty
/// exempt set `A`.
#[derive(Debug, Clone)]
pub struct LyapunovFunction {
    values: Vec<Scaled>,
    exempt: BTreeSet<usize>,
}

impl LyapunovFunction {
    /// `values[k - 1]` is `f_k`; `exempt` holds 1-based levels.
    pub fn new(values: Vec<f64>, exempt: BTreeSet<usize>) -> Result<Self> {
        if let Some((i, v)) = values.iter().enumerate().find(|(_, v)| !(**v > 0.0) || !v.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "Lyapunov value f_{} = {v} is not strictly positive",
                i + 1
            )));
        }
        Self::from_scaled(values.into_iter().map(Scaled::new).collect(), exempt)
    }

    fn from_scaled(values: Vec<Scaled>, exempt: BTreeSet<usize>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidParameter("Lyapunov function has no levels".into()));
        }
        if exempt.is_empty() {
            return Err(Error::InvalidParameter("exempt set must be non-empty".into()));
        }
        if let Some(&k) = exempt.iter().find(|&&k| k == 0 || k > values.len()) {
            return Err(Error::InvalidParameter(format!(
                "exempt level {k} outside 1..={}",
                values.len()
            )));
        }
        Ok(Self { values, exempt })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn exempt(&self) -> &BTreeSet<usize> {
        &self.exempt
    }

    /// `f_k` as a plain float; `inf` when it exceeds the `f64` range.
    pub fn value(&self, k: usize) -> f64 {
        self.values[k - 1].to_f64()
    }

    pub fn ln_value(&self, k: usize) -> f64 {
        self.values[k - 1].ln()
    }

    /// `f_k / f_m`, accurate even when both overflow `f64`.
    pub fn ratio(&self, k: usize, m: usize) -> f64 {
        self.values[k - 1].ratio(self.values[m - 1])
    }

    fn min_exempt(&self) -> Scaled {
        self.exempt
            .iter()
            .map(|&k| self.values[k - 1])
            .reduce(|a, b| if b.lt(a) { b } else { a })
            .expect("exempt set is non-empty")
    }
}

/// Which conclusion of the criterion the function supports.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DriftMode {
    /// Non-decreasing and growing across the window: the finite-window
    /// signature of `f_k -> infinity`.
    RecurrenceForm,
    /// Some level outside `A` sits below `min_{m in A} f_m`.
    TransienceForm,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DriftReport {
    /// `max_m (sum_k T[k, m] f_k / f_m - 1)` over checked columns; 0 when
    /// no column is checked.
    pub max_violation: f64,
    pub satisfied: bool,
    pub mode: Option<DriftMode>,
    /// Number of columns checked (all interior columns outside `A`).
    pub columns_checked: usize,
}

/// Checks `sum_k T[k, m] f_k <= f_m` for every interior column `m` outside
/// the exempt set, relative to `f_m`, with slack [`DRIFT_SLACK`].
pub fn foster_drift_check(t: &TransitionMatrix, f: &LyapunovFunction) -> Result<DriftReport> {
    let n = t.n();
    if f.len() < n {
        return Err(Error::Dimension(format!(
            "Lyapunov function covers {} levels, matrix has {n}",
            f.len()
        )));
    }
    let mut max_violation = f64::NEG_INFINITY;
    let mut columns_checked = 0;
    for m in 1..=t.interior_columns() {
        if f.exempt.contains(&m) {
            continue;
        }
        let drift: f64 = t.column(m).map(|(k, v)| v * f.ratio(k, m)).sum();
        max_violation = max_violation.max(drift - 1.0);
        columns_checked += 1;
    }
    if columns_checked == 0 {
        max_violation = 0.0;
    }
    let satisfied = max_violation <= DRIFT_SLACK;

    let floor = f.min_exempt();
    let outside = (1..=n).filter(|k| !f.exempt.contains(k));
    let mode = if outside.clone().any(|k| f.values[k - 1].lt(floor)) {
        Some(DriftMode::TransienceForm)
    } else {
        let levels: Vec<usize> = outside.collect();
        let non_decreasing = levels.windows(2).all(|w| !f.values[w[1] - 1].lt(f.values[w[0] - 1]));
        let grows = match (levels.first(), levels.last()) {
            (Some(&a), Some(&b)) => f.values[a - 1].lt(f.values[b - 1]),
            _ => false,
        };
        (non_decreasing && grows).then_some(DriftMode::RecurrenceForm)
    };
    Ok(DriftReport { max_violation, satisfied, mode, columns_checked })
}

/// Recurrence witness for passive two-level fuel:
/// `f_n = 1 + a_2 sum_{k=2}^{n-1} (1/a_{k+1}) (s_1/s_2)^(k-1)` for `n >= 2`,
/// `f_1 = 0`, all shifted up by [`RECURRENT_FLOOR`]; exempt set `{1}`.
pub fn recurrent_lyapunov_qubit(
    params: &QubitSwapParams,
    xi: &QuditState,
    n: usize,
) -> Result<LyapunovFunction> {
    let (s1, s2) = qubit_pops(xi)?;
    if s1 < s2 {
        return Err(Error::InvalidParameter(format!(
            "recurrence witness needs s1 >= s2, got ({s1}, {s2})"
        )));
    }
    if s2 == 0.0 {
        return Err(Error::InvalidParameter("s2 = 0: the chain never moves up".into()));
    }
    if n < 2 || params.last_shell() < n {
        return Err(Error::InvalidParameter(format!(
            "need n >= 2 and alpha_2..alpha_{n}, have up to alpha_{}",
            params.last_shell()
        )));
    }
    if let Some(k) = (2..=n).find(|&k| params.alpha(k) == 0.0) {
        return Err(Error::InvalidParameter(format!(
            "alpha_{k} = 0 makes the witness undefined (chain not irreducible)"
        )));
    }
    let ratio = s1 / s2;
    let alpha2 = params.alpha(2);
    let floor = Scaled::new(RECURRENT_FLOOR);
    let mut values = Vec::with_capacity(n);
    values.push(floor);
    let mut sum = Scaled::new(1.0);
    // power = (s1/s2)^(k-1), starting at k = 2
    let mut power = Scaled::new(ratio);
    for k in 2..=n {
        values.push(sum.add(floor));
        if k < n {
            sum = sum.add(power.scale(alpha2 / params.alpha(k + 1)));
            power = power.scale(ratio);
        }
    }
    LyapunovFunction::from_scaled(values, BTreeSet::from([1]))
}

/// Transience witness for active two-level fuel under the full swap:
/// `f_k = f_1 - delta_1 sum_{i=0}^{k-2} a^i`, strictly decreasing and bounded
/// below by `f_1 - delta_1 / (1 - a)`; exempt set `{1}`.
pub fn transient_lyapunov_qubit(
    xi: &QuditState,
    a: f64,
    f1: f64,
    delta1: f64,
    n: usize,
) -> Result<LyapunovFunction> {
    let (s1, s2) = qubit_pops(xi)?;
    if !(s2 > 0.5) {
        return Err(Error::InvalidParameter(format!(
            "transience witness needs s2 > 1/2, got s2 = {s2}"
        )));
    }
    if !(a >= s1 / s2 && a < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "a = {a} outside [s1/s2, 1) = [{}, 1)",
            s1 / s2
        )));
    }
    if !(delta1 > 0.0) || !(f1 > delta1 / (1.0 - a)) {
        return Err(Error::InvalidParameter(format!(
            "need delta1 > 0 and f1 > delta1/(1-a) = {}",
            delta1 / (1.0 - a)
        )));
    }
    if n == 0 {
        return Err(Error::InvalidParameter("need at least one level".into()));
    }
    let values = (1..=n)
        .map(|k| f1 - delta1 * (1.0 - a.powi(k as i32 - 1)) / (1.0 - a))
        .collect();
    LyapunovFunction::new(values, BTreeSet::from([1]))
}

fn qubit_pops(xi: &QuditState) -> Result<(f64, f64)> {
    if xi.dim() != 2 {
        return Err(Error::Dimension(format!("need a two-level fuel, got d = {}", xi.dim())));
    }
    Ok((xi.s(1), xi.s(2)))
}

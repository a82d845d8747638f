//! Battery level populations and the energy functionals defined on them.
//!
//! Level `k = 1, 2, ...` of the oscillator carries energy `k` (units of the
//! oscillator quantum). A [`BatteryDistribution`] keeps the first `N` levels
//! plus the probability mass that has left the truncated window.

use std::fmt;

use crate::error::{Error, Result};

const TOTAL_MASS_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct BatteryDistribution {
    probs: Vec<f64>,
    leaked_mass: f64,
}

impl BatteryDistribution {
    /// Validated constructor: entries non-negative and
    /// `sum(probs) + leaked_mass = 1` within `1e-12`.
    pub fn new(probs: Vec<f64>, leaked_mass: f64) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidState("battery distribution has no levels".into()));
        }
        if let Some((k, p)) = probs
            .iter()
            .enumerate()
            .find(|(_, p)| !p.is_finite() || **p < 0.0)
        {
            return Err(Error::InvalidState(format!("level {} has population {p}", k + 1)));
        }
        if !leaked_mass.is_finite() || leaked_mass < 0.0 {
            return Err(Error::InvalidState(format!("leaked mass {leaked_mass} is negative")));
        }
        let total = probs.iter().sum::<f64>() + leaked_mass;
        if (total - 1.0).abs() > TOTAL_MASS_TOL {
            return Err(Error::InvalidState(format!(
                "populations plus leaked mass sum to {total}, expected 1"
            )));
        }
        Ok(Self { probs, leaked_mass })
    }

    /// Internal constructor for evolution code that maintains the invariants
    /// itself (up to accumulated rounding).
    pub(crate) fn from_parts(probs: Vec<f64>, leaked_mass: f64) -> Self {
        Self { probs, leaked_mass }
    }

    /// Pure state `|k><k|` on `n` retained levels (`k` is 1-based).
    pub fn delta(k: usize, n: usize) -> Result<Self> {
        if k == 0 || k > n {
            return Err(Error::InvalidParameter(format!(
                "level {k} outside the window 1..={n}"
            )));
        }
        let mut probs = vec![0.0; n];
        probs[k - 1] = 1.0;
        Ok(Self { probs, leaked_mass: 0.0 })
    }

    /// Ground state of the oscillator on `n` retained levels.
    pub fn ground(n: usize) -> Result<Self> {
        Self::delta(1, n)
    }

    /// Number of retained levels `N`.
    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Population of level `k` (1-based).
    pub fn p(&self, k: usize) -> f64 {
        self.probs[k - 1]
    }

    pub fn leaked_mass(&self) -> f64 {
        self.leaked_mass
    }

    /// `sum(probs)`, excluding leaked mass.
    pub fn retained_mass(&self) -> f64 {
        self.probs.iter().sum()
    }

    /// Same populations on a window of `n >= len()` levels.
    pub fn padded(&self, n: usize) -> Self {
        let mut probs = self.probs.clone();
        if n > probs.len() {
            probs.resize(n, 0.0);
        }
        Self { probs, leaked_mass: self.leaked_mass }
    }

    /// Retained populations rescaled to unit mass, leaked mass reset to zero.
    pub fn renormalized(&self) -> Result<Self> {
        let total = self.retained_mass();
        if !(total > 0.0) {
            return Err(Error::InvalidState("no retained mass to renormalize".into()));
        }
        Ok(Self {
            probs: self.probs.iter().map(|p| p / total).collect(),
            leaked_mass: 0.0,
        })
    }

    /// True when populations are non-increasing in `k` up to `tol`.
    pub fn is_passive_profile(&self, tol: f64) -> bool {
        self.probs.windows(2).all(|w| w[1] <= w[0] + tol)
    }
}

/// Energy in units of the oscillator quantum.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct EnergyValue(f64);

impl EnergyValue {
    pub fn new(value: f64) -> Self {
        Self(value)
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl fmt::Display for EnergyValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// `sum_k k * p_k` over retained levels; leaked mass is not counted.
pub fn mean_energy(p: &BatteryDistribution) -> EnergyValue {
    EnergyValue(mean_energy_of(p.probs()))
}

pub(crate) fn mean_energy_of(probs: &[f64]) -> f64 {
    weighted_level_sum(probs.iter().copied())
}

fn weighted_level_sum(probs: impl Iterator<Item = f64>) -> f64 {
    probs.enumerate().map(|(i, x)| (i + 1) as f64 * x).sum()
}

/// Incoherent ergotropy: the energy of `p` minus the energy of its passive
/// rearrangement (populations sorted non-increasingly against the ascending
/// ladder).
pub fn ergotropy(p: &BatteryDistribution) -> EnergyValue {
    EnergyValue(ergotropy_of(p.probs()))
}

pub(crate) fn ergotropy_of(probs: &[f64]) -> f64 {
    if probs.windows(2).all(|w| w[1] <= w[0]) {
        return 0.0;
    }
    // zeros sort to the tail and contribute nothing
    let mut sorted: Vec<f64> = probs.iter().copied().filter(|&x| x > 0.0).collect();
    sorted.sort_unstable_by(|a, b| b.total_cmp(a));
    let passive = weighted_level_sum(sorted.into_iter());
    let active = weighted_level_sum(probs.iter().copied());
    (active - passive).max(0.0)
}

/// Total-variation distance `(1/2) sum_k |p_k - q_k|` over retained levels.
pub fn tv_distance(p: &BatteryDistribution, q: &BatteryDistribution) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::Dimension(format!(
            "distributions have {} and {} levels",
            p.len(),
            q.len()
        )));
    }
    Ok(0.5
        * p.probs()
            .iter()
            .zip(q.probs())
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>())
}

/// Normalized geometric profile `p_k ∝ ratio^(k-1)` on `n` levels: the Gibbs
/// state whose neighbouring-level ratio is `ratio`.
pub fn geometric_distribution(ratio: f64, n: usize) -> Result<BatteryDistribution> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::NotNormalizable(ratio));
    }
    if n == 0 {
        return Err(Error::InvalidParameter("need at least one level".into()));
    }
    let mut probs = Vec::with_capacity(n);
    let mut w = 1.0;
    for _ in 0..n {
        probs.push(w);
        w *= ratio;
    }
    let total: f64 = probs.iter().sum();
    probs.iter_mut().for_each(|x| *x /= total);
    Ok(BatteryDistribution { probs, leaked_mass: 0.0 })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dist(v: &[f64]) -> BatteryDistribution {
        BatteryDistribution::new(v.to_vec(), 0.0).unwrap()
    }

    #[test]
    fn ergotropy_examples() {
        assert_eq!(ergotropy(&dist(&[0.5, 0.5])).value(), 0.0);
        assert!((ergotropy(&dist(&[0.3, 0.7])).value() - 0.4).abs() < 1e-14);
        assert!((ergotropy(&dist(&[0.2, 0.3, 0.5])).value() - 0.6).abs() < 1e-14);
    }

    #[test]
    fn mean_energy_examples() {
        assert_eq!(mean_energy(&BatteryDistribution::ground(4).unwrap()).value(), 1.0);
        assert_eq!(mean_energy(&dist(&[0.5, 0.5])).value(), 1.5);
        assert!((mean_energy(&dist(&[0.70, 0.21, 0.09])).value() - 1.39).abs() < 1e-14);
    }

    #[test]
    fn mean_energy_excludes_leaked_mass() {
        let p = BatteryDistribution::new(vec![0.5, 0.25], 0.25).unwrap();
        assert_eq!(mean_energy(&p).value(), 1.0);
    }

    #[test]
    fn tv_examples() {
        let a = dist(&[0.7, 0.3]);
        let b = dist(&[0.3, 0.7]);
        assert_eq!(tv_distance(&a, &a).unwrap(), 0.0);
        assert!((tv_distance(&a, &b).unwrap() - 0.4).abs() < 1e-15);
        let d1 = BatteryDistribution::delta(1, 3).unwrap();
        let d2 = BatteryDistribution::delta(2, 3).unwrap();
        assert_eq!(tv_distance(&d1, &d2).unwrap(), 1.0);
        assert!(matches!(
            tv_distance(&a, &BatteryDistribution::ground(3).unwrap()),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn geometric_examples() {
        let g = geometric_distribution(0.5, 2).unwrap();
        assert!((g.p(1) - 2.0 / 3.0).abs() < 1e-15);
        assert!((g.p(2) - 1.0 / 3.0).abs() < 1e-15);
        let g = geometric_distribution(3.0 / 7.0, 400).unwrap();
        assert!((g.p(1) - 4.0 / 7.0).abs() < 1e-14);
        for k in 1..50 {
            assert!((g.p(k + 1) / g.p(k) - 3.0 / 7.0).abs() < 1e-13);
        }
        assert!(matches!(geometric_distribution(1.0, 10), Err(Error::NotNormalizable(_))));
        assert!(geometric_distribution(0.0, 10).is_err());
        assert!(geometric_distribution(0.5, 0).is_err());
    }

    #[test]
    fn validation() {
        assert!(BatteryDistribution::new(vec![0.5, 0.4], 0.0).is_err());
        assert!(BatteryDistribution::new(vec![0.5, 0.4], 0.1).is_ok());
        assert!(BatteryDistribution::new(vec![1.1, -0.1], 0.0).is_err());
        assert!(BatteryDistribution::new(vec![], 1.0).is_err());
        assert!(BatteryDistribution::delta(0, 3).is_err());
        assert!(BatteryDistribution::delta(4, 3).is_err());
    }
}

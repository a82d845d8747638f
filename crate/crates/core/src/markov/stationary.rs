//! Fixed points of the truncated chain.

use super::banded::solve_banded;
use super::irreducible::check_irreducible;
use crate::distribution::BatteryDistribution;
use crate::error::{Error, Result};
use crate::evolve::step_into;
use crate::transition::TransitionMatrix;

/// Largest window accepted by [`stationary_direct`].
const DIRECT_LIMIT: usize = 2000;

/// Power iteration from the ground state. See [`stationary_distribution_from`].
pub fn stationary_distribution(
    t: &TransitionMatrix,
    tol: f64,
    max_iters: usize,
) -> Result<Option<BatteryDistribution>> {
    let p0 = BatteryDistribution::ground(t.n())?;
    stationary_distribution_from(t, &p0, tol, max_iters)
}

/// Iterates `p <- T p / |T p|` until successive iterates differ by less than
/// `tol` in L1.
///
/// Returns `None` when the iteration settles (or runs out of iterations)
/// while losing at least `tol` of its mass through the truncation edge per
/// step: the chain has no fixed point the window can hold.
pub fn stationary_distribution_from(
    t: &TransitionMatrix,
    p0: &BatteryDistribution,
    tol: f64,
    max_iters: usize,
) -> Result<Option<BatteryDistribution>> {
    if !(tol > 0.0) || max_iters == 0 {
        return Err(Error::InvalidParameter("need tol > 0 and max_iters >= 1".into()));
    }
    if p0.len() != t.n() {
        return Err(Error::Dimension(format!(
            "initial vector has {} levels, matrix has {}",
            p0.len(),
            t.n()
        )));
    }
    if !check_irreducible(t) {
        return Err(Error::Reducible(
            "stationary state is not unique; solve each communicating class separately".into(),
        ));
    }
    let mut src = p0.renormalized()?.probs().to_vec();
    let mut dst = vec![0.0; src.len()];
    let mut leak = 0.0;
    let mut diff = f64::INFINITY;
    for _ in 0..max_iters {
        let (lost, _) = step_into(t, &src, &mut dst);
        let kept: f64 = dst.iter().sum();
        if !(kept > 0.0) {
            return Ok(None);
        }
        dst.iter_mut().for_each(|v| *v /= kept);
        leak = lost / (lost + kept);
        diff = src.iter().zip(&dst).map(|(a, b)| (a - b).abs()).sum();
        std::mem::swap(&mut src, &mut dst);
        if diff < tol {
            return Ok((leak < tol).then(|| BatteryDistribution::from_parts(src, 0.0)));
        }
    }
    if leak >= tol {
        return Ok(None);
    }
    Err(Error::Convergence(format!(
        "power iteration stalled after {max_iters} iterations with L1 change {diff:e}"
    )))
}

/// Direct solve of `T p = p` with `p_1 = 1` from the first `N - 1` balance
/// equations, then normalized. Limited to windows below 2000 levels.
pub fn stationary_direct(t: &TransitionMatrix) -> Result<BatteryDistribution> {
    let n = t.n();
    if n >= DIRECT_LIMIT {
        return Err(Error::InvalidParameter(format!(
            "direct solve limited to N < {DIRECT_LIMIT}, got {n}"
        )));
    }
    if !check_irreducible(t) {
        return Err(Error::Reducible(
            "stationary state is not unique; solve each communicating class separately".into(),
        ));
    }
    if n == 1 {
        return BatteryDistribution::ground(1);
    }
    let d = t.d();
    // Unknown j is p_{j+2}; equation r is row r + 1 of (T - I).
    let entry = |r: usize, c: usize| {
        let (k, m) = (r + 1, c + 2);
        t.get(k, m) - if k == m { 1.0 } else { 0.0 }
    };
    let rhs: Vec<f64> = (1..n).map(|k| -(t.get(k, 1) - if k == 1 { 1.0 } else { 0.0 })).collect();
    let tail = solve_banded(n - 1, d, d.saturating_sub(2), entry, rhs)?;
    let mut probs = Vec::with_capacity(n);
    probs.push(1.0);
    probs.extend(tail.into_iter().map(|v| v.max(0.0)));
    let total: f64 = probs.iter().sum();
    probs.iter_mut().for_each(|v| *v /= total);
    Ok(BatteryDistribution::from_parts(probs, 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distribution::{ergotropy, geometric_distribution, tv_distance};
    use crate::markov::tests_support::swap;

    #[test]
    fn gibbs_fixed_point() {
        let t = swap(0.7, 200);
        let p = stationary_distribution(&t, 1e-14, 100_000).unwrap().unwrap();
        let g = geometric_distribution(3.0 / 7.0, 200).unwrap();
        assert!(tv_distance(&p, &g).unwrap() < 1e-10);
        assert!(ergotropy(&p).value() < 1e-12);
        let q = stationary_direct(&t).unwrap();
        assert!(tv_distance(&p, &q).unwrap() < 1e-10);
    }

    #[test]
    fn escaping_mass_has_no_fixed_point() {
        assert!(stationary_distribution(&swap(0.3, 100), 1e-12, 100_000).unwrap().is_none());
    }

    #[test]
    fn reducible_rejected() {
        let t = TransitionMatrix::identity(4).unwrap();
        assert!(matches!(stationary_distribution(&t, 1e-10, 10), Err(Error::Reducible(_))));
        assert!(matches!(stationary_direct(&t), Err(Error::Reducible(_))));
    }

    #[test]
    fn iteration_budget() {
        let t = swap(0.7, 200);
        assert!(matches!(stationary_distribution(&t, 1e-14, 3), Err(Error::Convergence(_))));
        assert!(stationary_distribution(&t, 0.0, 3).is_err());
    }
}

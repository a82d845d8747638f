//! Gaussian elimination with partial pivoting for banded systems.

use crate::error::{Error, Result};

/// Solves `A x = b` for an `n x n` matrix with `kl` sub- and `ku`
/// super-diagonals; `entry(r, c)` is only queried inside the band.
pub(crate) fn solve_banded(
    n: usize,
    kl: usize,
    ku: usize,
    entry: impl Fn(usize, usize) -> f64,
    mut b: Vec<f64>,
) -> Result<Vec<f64>> {
    if b.len() != n {
        return Err(Error::Dimension(format!("rhs length {} for n = {n}", b.len())));
    }
    // Row i holds columns i - kl ..= i + kl + ku; pivoting fills the upper
    // part up to kl + ku.
    let width = 2 * kl + ku + 1;
    let mut a = vec![0.0; n * width];
    let slot = |i: usize, j: usize| i * width + (j + kl - i);
    for i in 0..n {
        for j in i.saturating_sub(kl)..=(i + ku).min(n - 1) {
            a[slot(i, j)] = entry(i, j);
        }
    }

    let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for k in 0..n {
        let last_row = (k + kl).min(n - 1);
        let last_col = (k + kl + ku).min(n - 1);
        let pivot = (k..=last_row)
            .max_by(|&x, &y| a[slot(x, k)].abs().total_cmp(&a[slot(y, k)].abs()))
            .expect("non-empty range");
        if a[slot(pivot, k)].abs() <= scale * 1e-14 {
            return Err(Error::Convergence(format!("singular banded system at column {k}")));
        }
        if pivot != k {
            for j in k..=last_col {
                a.swap(slot(pivot, j), slot(k, j));
            }
            b.swap(pivot, k);
        }
        let diag = a[slot(k, k)];
        for i in k + 1..=last_row {
            let factor = a[slot(i, k)] / diag;
            if factor == 0.0 {
                continue;
            }
            a[slot(i, k)] = 0.0;
            for j in k + 1..=last_col {
                a[slot(i, j)] -= factor * a[slot(k, j)];
            }
            b[i] -= factor * b[k];
        }
    }
    for k in (0..n).rev() {
        let last_col = (k + kl + ku).min(n - 1);
        let tail: f64 = (k + 1..=last_col).map(|j| a[slot(k, j)] * b[j]).sum();
        b[k] = (b[k] - tail) / a[slot(k, k)];
    }
    Ok(b)
}

use std::fmt::Write as _;
use std::io::{self, Write};

use super::blocks::{shell_size, BistochasticBlocks, QubitSwapParams};
use crate::error::{Error, Result};
use crate::format::sig17;
use crate::state::QuditState;

/// Column sums of interior columns must equal one within this tolerance.
pub const COLUMN_SUM_TOL: f64 = 1e-10;

// tiny negative entries produced by cancellation are flushed to zero
const NEGATIVE_FLUSH: f64 = 1e-14;

/// Where a [`TransitionMatrix`] came from.
#[derive(Debug, Clone, PartialEq)]
pub struct Provenance {
    pub source: String,
    pub fuel: Option<Vec<f64>>,
    pub truncation: usize,
}

/// Column-stochastic transition matrix on levels `1..=N`, stored as a band of
/// half-width `d - 1` around the diagonal.
///
/// `T[k, m]` is the probability of moving from level `m` to level `k`. The
/// last `d - 1` columns may be sub-stochastic: their deficit is mass that
/// leaves the truncated window.
#[derive(Debug, Clone)]
pub struct TransitionMatrix {
    n: usize,
    d: usize,
    // column-major band, column m occupies band[(m-1)*w .. m*w],
    // slot (k - m + d - 1)
    band: Vec<f64>,
    deficits: Vec<f64>,
    provenance: Provenance,
}

impl TransitionMatrix {
    /// Builds a matrix from `(k, m, value)` triples (1-based, accumulated).
    pub fn from_entries(
        n: usize,
        d: usize,
        entries: impl IntoIterator<Item = (usize, usize, f64)>,
        provenance: Provenance,
    ) -> Result<Self> {
        if n == 0 || d == 0 {
            return Err(Error::Dimension(format!("need N >= 1 and d >= 1, got N={n}, d={d}")));
        }
        let w = 2 * d - 1;
        let mut band = vec![0.0; n * w];
        for (k, m, v) in entries {
            if k == 0 || m == 0 || k > n || m > n {
                return Err(Error::Dimension(format!("entry ({k}, {m}) outside 1..={n}")));
            }
            if k.abs_diff(m) >= d {
                return Err(Error::Dimension(format!(
                    "entry ({k}, {m}) outside the band |k - m| < {d}"
                )));
            }
            band[(m - 1) * w + (k + d - 1 - m)] += v;
        }
        Self::from_band(n, d, band, provenance)
    }

    fn from_band(n: usize, d: usize, mut band: Vec<f64>, provenance: Provenance) -> Result<Self> {
        let w = 2 * d - 1;
        for (idx, x) in band.iter_mut().enumerate() {
            if *x < 0.0 && *x > -NEGATIVE_FLUSH {
                *x = 0.0;
            }
            if !x.is_finite() || *x < 0.0 || *x > 1.0 + COLUMN_SUM_TOL {
                let m = idx / w + 1;
                let k = (m + idx % w + 1).saturating_sub(d);
                return Err(Error::InvalidParameter(format!(
                    "entry ({k}, {m}) = {x} outside [0, 1]"
                )));
            }
        }
        let interior = n.saturating_sub(d - 1);
        let mut deficits = Vec::with_capacity(n);
        for m in 1..=n {
            let sum: f64 = band[(m - 1) * w..m * w].iter().sum();
            if sum > 1.0 + COLUMN_SUM_TOL || (m <= interior && (sum - 1.0).abs() > COLUMN_SUM_TOL) {
                return Err(Error::InvalidParameter(format!(
                    "column {m} sums to {sum}, expected 1"
                )));
            }
            deficits.push((1.0 - sum).max(0.0));
        }
        Ok(Self { n, d, band, deficits, provenance })
    }

    /// The identity on `n` levels (band width one).
    pub fn identity(n: usize) -> Result<Self> {
        Self::from_entries(
            n,
            1,
            (1..=n).map(|k| (k, k, 1.0)),
            Provenance { source: "identity".into(), fuel: None, truncation: n },
        )
    }

    /// Number of retained levels `N`.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Band half-width plus one; equals the fuel dimension for collision
    /// matrices.
    pub fn d(&self) -> usize {
        self.d
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    /// Number of leading columns that are fully stochastic (`N - (d - 1)`).
    pub fn interior_columns(&self) -> usize {
        self.n.saturating_sub(self.d - 1)
    }

    fn width(&self) -> usize {
        2 * self.d - 1
    }

    /// Entry `T[k, m]` (1-based); zero outside the band or the window.
    pub fn get(&self, k: usize, m: usize) -> f64 {
        if k == 0 || m == 0 || k > self.n || m > self.n || k.abs_diff(m) >= self.d {
            return 0.0;
        }
        self.band[(m - 1) * self.width() + (k + self.d - 1 - m)]
    }

    /// First retained level reachable from column `m`.
    pub(crate) fn column_start(&self, m: usize) -> usize {
        m.saturating_sub(self.d - 1).max(1)
    }

    /// Band slice of column `m` restricted to levels `column_start(m)..`
    /// within the window.
    pub(crate) fn column_slice(&self, m: usize) -> &[f64] {
        let w = self.width();
        let lo = self.column_start(m);
        let hi = (m + self.d - 1).min(self.n);
        let base = (m - 1) * w;
        &self.band[base + (lo + self.d - 1 - m)..=base + (hi + self.d - 1 - m)]
    }

    /// Non-zero-slot iterator over column `m`: `(k, T[k, m])`.
    pub fn column(&self, m: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let lo = self.column_start(m);
        self.column_slice(m).iter().enumerate().map(move |(i, &v)| (lo + i, v))
    }

    pub fn column_sum(&self, m: usize) -> f64 {
        self.column_slice(m).iter().sum()
    }

    /// Probability that one step from level `m` leaves the window.
    pub fn deficit(&self, m: usize) -> f64 {
        self.deficits[m - 1]
    }

    /// Writes the text format: a header line `N d`, then `k m value` for
    /// every stored band entry inside the window.
    pub fn write_text<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "{} {}", self.n, self.d)?;
        for m in 1..=self.n {
            for (k, v) in self.column(m) {
                writeln!(out, "{k} {m} {}", sig17(v))?;
            }
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{} {}", self.n, self.d);
        for m in 1..=self.n {
            for (k, v) in self.column(m) {
                let _ = writeln!(s, "{k} {m} {}", sig17(v));
            }
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty());
        let (hline, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            msg: "missing header 'N d'".into(),
        })?;
        let head: Vec<&str> = header.split_whitespace().collect();
        if head.len() != 2 {
            return Err(Error::Parse { line: hline, msg: format!("expected 'N d', got '{header}'") });
        }
        let n = parse_field::<usize>(head[0], hline)?;
        let d = parse_field::<usize>(head[1], hline)?;
        let mut entries = Vec::new();
        for (line, body) in lines {
            let f: Vec<&str> = body.split_whitespace().collect();
            if f.len() != 3 {
                return Err(Error::Parse { line, msg: format!("expected 'k m value', got '{body}'") });
            }
            entries.push((
                parse_field::<usize>(f[0], line)?,
                parse_field::<usize>(f[1], line)?,
                parse_field::<f64>(f[2], line)?,
            ));
        }
        Self::from_entries(
            n,
            d,
            entries,
            Provenance { source: "text".into(), fuel: None, truncation: n },
        )
    }
}

fn parse_field<T: std::str::FromStr>(s: &str, line: usize) -> Result<T> {
    s.parse().map_err(|_| Error::Parse { line, msg: format!("cannot parse '{s}'") })
}

/// Compiles bistochastic collision blocks and a diagonal fuel into the
/// transition matrix on levels `1..=n`:
///
/// `T[k, m] = sum_n sum_{i,j} B^(n)_ij s_j [m = n - j + 1] [k = n - i + 1]`.
///
/// Shells beyond those supplied are absent; with at least `n + d - 1` shells
/// every entry inside the window is exact.
pub fn build_transition_matrix(
    blocks: &BistochasticBlocks,
    xi: &QuditState,
    n: usize,
) -> Result<TransitionMatrix> {
    let d = xi.dim();
    if blocks.d() != d {
        return Err(Error::Dimension(format!(
            "blocks are for a {}-level fuel, state has {d} levels",
            blocks.d()
        )));
    }
    if n == 0 || n > blocks.shells() {
        return Err(Error::Dimension(format!(
            "truncation {n} needs 1..={} shells",
            blocks.shells()
        )));
    }
    let w = 2 * d - 1;
    let mut band = vec![0.0; n * w];
    let last_shell = blocks.shells().min(n + d - 1);
    for shell in 1..=last_shell {
        let b = blocks.block(shell);
        let size = shell_size(shell, d);
        for j in 1..=size {
            let m = shell + 1 - j;
            if m > n {
                continue;
            }
            let sj = xi.s(j);
            for i in 1..=size {
                let k = shell + 1 - i;
                if k > n {
                    continue;
                }
                band[(m - 1) * w + (k + d - 1 - m)] += b[(i - 1, j - 1)] * sj;
            }
        }
    }
    TransitionMatrix::from_band(
        n,
        d,
        band,
        Provenance {
            source: format!("blocks(d={d}, shells={})", blocks.shells()),
            fuel: Some(xi.probs().to_vec()),
            truncation: n,
        },
    )
}

/// Closed-form nearest-neighbour matrix for a two-level fuel:
/// column 1 is `(1 - a_2 s_2, a_2 s_2)`, column `m > 1` has
/// `T[m-1, m] = a_m s_1`, `T[m, m] = 1 - a_m s_1 - a_{m+1} s_2`,
/// `T[m+1, m] = a_{m+1} s_2`.
pub fn qubit_transition_matrix(
    params: &QubitSwapParams,
    xi: &QuditState,
    n: usize,
) -> Result<TransitionMatrix> {
    if xi.dim() != 2 {
        return Err(Error::Dimension(format!("qubit chain needs d = 2, got {}", xi.dim())));
    }
    if n == 0 || params.last_shell() < n + 1 {
        return Err(Error::InvalidParameter(format!(
            "truncation {n} needs alpha_2..alpha_{}, have up to alpha_{}",
            n + 1,
            params.last_shell()
        )));
    }
    let (s1, s2) = (xi.s(1), xi.s(2));
    let mut entries = Vec::with_capacity(3 * n);
    for m in 1..=n {
        let up = params.alpha(m + 1) * s2;
        if m == 1 {
            entries.push((1, 1, 1.0 - up));
        } else {
            let down = params.alpha(m) * s1;
            entries.push((m - 1, m, down));
            entries.push((m, m, 1.0 - down - up));
        }
        if m < n {
            entries.push((m + 1, m, up));
        }
    }
    TransitionMatrix::from_entries(
        n,
        2,
        entries,
        Provenance {
            source: "qubit-swap".into(),
            fuel: Some(xi.probs().to_vec()),
            truncation: n,
        },
    )
}

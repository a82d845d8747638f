use std::collections::VecDeque;

use crate::transition::TransitionMatrix;

/// Whether the retained levels form one communicating class: the directed
/// graph with an edge `m -> k` whenever `T[k, m] > 0` is strongly connected.
///
/// This only inspects the truncated window; it cannot certify
/// irreducibility of the infinite chain.
pub fn check_irreducible(t: &TransitionMatrix) -> bool {
    let n = t.n();
    if n == 1 {
        return true;
    }
    let forward = reach(n, |m, out| {
        out.extend(t.column(m).filter(|&(k, v)| v > 0.0 && k != m).map(|(k, _)| k))
    });
    if !forward {
        return false;
    }
    // reverse edges: k -> m when T[k, m] > 0
    let lo = |k: usize| k.saturating_sub(t.d() - 1).max(1);
    let hi = |k: usize| (k + t.d() - 1).min(n);
    reach(n, |k, out| {
        out.extend((lo(k)..=hi(k)).filter(|&m| m != k && t.get(k, m) > 0.0))
    })
}

fn reach(n: usize, mut neighbours: impl FnMut(usize, &mut Vec<usize>)) -> bool {
    let mut seen = vec![false; n + 1];
    let mut queue = VecDeque::from([1usize]);
    seen[1] = true;
    let mut count = 1;
    let mut buf = Vec::new();
    while let Some(v) = queue.pop_front() {
        buf.clear();
        neighbours(v, &mut buf);
        for &w in &buf {
            if !seen[w] {
                seen[w] = true;
                count += 1;
                queue.push_back(w);
            }
        }
    }
    count == n
}

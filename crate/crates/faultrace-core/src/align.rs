//! Longest-common-subsequence machinery: nLCS similarity, selection of the
//! most similar fault-free reference, and the three-way diff splitting events
//! into common / only-in-faulty / only-in-fault-free.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::trace::{Symbol, SymbolSequence};

/// Result of aligning a faulty sequence against its selected reference.
///
/// `common` holds one materialized LCS as (faulty_index, faultfree_index,
/// symbol) pairs; `only_faulty` and `only_faultfree` hold the leftovers on
/// each side. Indices are strictly increasing within each list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LcsDiff {
    pub selected_fault_free_id: String,
    pub common: Vec<(usize, usize, Symbol)>,
    pub only_faulty: Vec<(usize, Symbol)>,
    pub only_faultfree: Vec<(usize, Symbol)>,
}

/// Longest run of equal leading symbols, and of equal trailing symbols
/// beyond it. Matching a shared prefix/suffix is always part of some maximal
/// LCS, so the quadratic DP only has to cover the middle window; traces in a
/// campaign are near-identical, which makes this the difference between
/// quadratic and near-linear work.
fn trim(xs: &[Symbol], ys: &[Symbol]) -> (usize, usize) {
    let max = xs.len().min(ys.len());
    let mut prefix = 0;
    while prefix < max && xs[prefix] == ys[prefix] {
        prefix += 1;
    }
    let mut suffix = 0;
    while suffix < max - prefix && xs[xs.len() - 1 - suffix] == ys[ys.len() - 1 - suffix] {
        suffix += 1;
    }
    (prefix, suffix)
}

fn lcs_length_raw(xs: &[Symbol], ys: &[Symbol]) -> usize {
    if xs.is_empty() || ys.is_empty() {
        return 0;
    }
    let mut prev = vec![0usize; ys.len() + 1];
    let mut cur = vec![0usize; ys.len() + 1];
    for xi in xs {
        for (j, yj) in ys.iter().enumerate() {
            cur[j + 1] = if xi == yj {
                prev[j] + 1
            } else {
                prev[j + 1].max(cur[j])
            };
        }
        core::mem::swap(&mut prev, &mut cur);
    }
    prev[ys.len()]
}

/// Length of a longest common subsequence, linear-space DP with common
/// prefix/suffix anchoring.
pub fn lcs_length(x: &SymbolSequence, y: &SymbolSequence) -> usize {
    let (xs, ys) = (&x.symbols[..], &y.symbols[..]);
    let (prefix, suffix) = trim(xs, ys);
    prefix
        + suffix
        + lcs_length_raw(
            &xs[prefix..xs.len() - suffix],
            &ys[prefix..ys.len() - suffix],
        )
}

/// Normalized LCS length: |LCS(x,y)| / sqrt(l_x * l_y), in [0,1].
///
/// Defined as 0.0 when either sequence is empty (the formula would divide by
/// zero); callers that care can detect the case via `is_empty` beforehand.
pub fn nlcs(x: &SymbolSequence, y: &SymbolSequence) -> f64 {
    if x.is_empty() || y.is_empty() {
        return 0.0;
    }
    let l = lcs_length(x, y) as f64;
    l / libm::sqrt(x.len() as f64 * y.len() as f64)
}

/// Index of the pool sequence maximizing nLCS against `faulty`, with the
/// attained value. Ties break toward the lowest pool index.
///
/// Panics if the pool is empty.
pub fn select_reference(faulty: &SymbolSequence, pool: &[SymbolSequence]) -> (usize, f64) {
    assert!(!pool.is_empty(), "fault-free pool must be non-empty");
    let mut best = (0usize, f64::NEG_INFINITY);
    for (i, candidate) in pool.iter().enumerate() {
        let v = nlcs(faulty, candidate);
        if v > best.1 {
            best = (i, v);
        }
    }
    (best.0, best.1.max(0.0))
}

/// Three-way diff realizing one LCS of maximal length.
///
/// Backtrace tie rule: among the maximal LCS, the one matching the earliest
/// positions of the faulty sequence is materialized (common prefix and suffix
/// are anchored, then the middle window walks from the front preferring a
/// match, then a faulty-only step, then a reference-only step).
pub fn diff(faulty: &SymbolSequence, reference: &SymbolSequence) -> LcsDiff {
    let (fx, fy) = (&faulty.symbols[..], &reference.symbols[..]);
    let (prefix, suffix) = trim(fx, fy);
    let xs = &fx[prefix..fx.len() - suffix];
    let ys = &fy[prefix..fy.len() - suffix];
    let (m, n) = (xs.len(), ys.len());
    // dp[i][j] = LCS length of xs[i..] and ys[j..]
    let mut dp = vec![0u32; (m + 1) * (n + 1)];
    let idx = |i: usize, j: usize| i * (n + 1) + j;
    for i in (0..m).rev() {
        for j in (0..n).rev() {
            dp[idx(i, j)] = if xs[i] == ys[j] {
                dp[idx(i + 1, j + 1)] + 1
            } else {
                dp[idx(i + 1, j)].max(dp[idx(i, j + 1)])
            };
        }
    }
    let mut common: Vec<(usize, usize, Symbol)> =
        (0..prefix).map(|p| (p, p, fx[p])).collect();
    let mut only_faulty = Vec::new();
    let mut only_faultfree = Vec::new();
    let (mut i, mut j) = (0usize, 0usize);
    while i < m && j < n {
        if xs[i] == ys[j] && dp[idx(i, j)] == dp[idx(i + 1, j + 1)] + 1 {
            common.push((prefix + i, prefix + j, xs[i]));
            i += 1;
            j += 1;
        } else if dp[idx(i + 1, j)] == dp[idx(i, j)] {
            only_faulty.push((prefix + i, xs[i]));
            i += 1;
        } else {
            only_faultfree.push((prefix + j, ys[j]));
            j += 1;
        }
    }
    only_faulty.extend(xs[i..].iter().enumerate().map(|(k, s)| (prefix + i + k, *s)));
    only_faultfree.extend(ys[j..].iter().enumerate().map(|(k, s)| (prefix + j + k, *s)));
    common.extend((0..suffix).map(|t| {
        let (xi, yj) = (fx.len() - suffix + t, fy.len() - suffix + t);
        (xi, yj, fx[xi])
    }));
    LcsDiff {
        selected_fault_free_id: reference.trace_id.clone(),
        common,
        only_faulty,
        only_faultfree,
    }
}

//! Jenks natural-breaks classification: optimal contiguous 1-D partition of
//! values into k classes minimizing the sum of squared deviations from class
//! means (SDCM), by Fisher's exact dynamic program rather than the iterative
//! heuristic.
//!
//! Equal values never split across classes, so the program runs over runs of
//! equal values ("blocks"). For the SDCM objective a boundary inside a run is
//! never strictly better than moving it to either end of the run, so the
//! block-level optimum is the global one.

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BreaksError {
    #[error("k must be >= 1, got {0}")]
    BadK(usize),
    #[error("{distinct} distinct value(s) cannot fill {k} classes")]
    TooFewDistinct { distinct: usize, k: usize },
    #[error("values and boundaries must be finite")]
    NonFinite,
    #[error("boundaries must be strictly increasing")]
    UnsortedBoundaries,
}

/// Result of a k-class natural-breaks run.
///
/// `boundaries` holds the k−1 cut points, each the midpoint between one
/// class's maximum and the next class's minimum, so re-binning against them
/// is unambiguous. `labels[i]` is the class of input `values[i]` in original
/// order. `sdcm` is the minimized objective.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BreaksClassification {
    pub k: usize,
    pub boundaries: Vec<f64>,
    pub labels: Vec<usize>,
    pub sdcm: f64,
}

/// Within-class squared deviation of `sorted[lo..hi]`, computed by the
/// definitional two-pass mean-then-deviations loop in index order.
fn class_sse(sorted: &[f64], lo: usize, hi: usize) -> f64 {
    let n = (hi - lo) as f64;
    let mut sum = 0.0;
    for &v in &sorted[lo..hi] {
        sum += v;
    }
    let mean = sum / n;
    let mut sse = 0.0;
    for &v in &sorted[lo..hi] {
        let d = v - mean;
        sse += d * d;
    }
    sse
}

/// Optimal k-class partition of `values` (Fisher's dynamic program, exact).
///
/// Deterministic: when several partitions tie exactly on SDCM, each backtrack
/// stage keeps the leftmost optimal break.
pub fn jenks_breaks(values: &[f64], k: usize) -> Result<BreaksClassification, BreaksError> {
    if k < 1 {
        return Err(BreaksError::BadK(k));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(BreaksError::NonFinite);
    }
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let sorted: Vec<f64> = order.iter().map(|&i| values[i]).collect();

    // element index where each run of equal values starts, plus sentinel n
    let mut block_start: Vec<usize> = Vec::new();
    for i in 0..n {
        if i == 0 || sorted[i] != sorted[i - 1] {
            block_start.push(i);
        }
    }
    let blocks = block_start.len();
    if blocks < k {
        return Err(BreaksError::TooFewDistinct { distinct: blocks, k });
    }
    block_start.push(n);

    // dp[c][i]: minimal SDCM of the first i blocks split into c classes
    let mut dp = vec![vec![f64::INFINITY; blocks + 1]; k + 1];
    let mut back = vec![vec![0usize; blocks + 1]; k + 1];
    for i in 1..=blocks {
        dp[1][i] = class_sse(&sorted, 0, block_start[i]);
    }
    for c in 2..=k {
        for i in c..=blocks {
            let mut best = f64::INFINITY;
            let mut best_j = c - 1;
            for j in (c - 1)..i {
                let cost = dp[c - 1][j] + class_sse(&sorted, block_start[j], block_start[i]);
                if cost < best {
                    best = cost;
                    best_j = j;
                }
            }
            dp[c][i] = best;
            back[c][i] = best_j;
        }
    }

    // recover class extents in block indices, left to right
    let mut cuts = vec![0usize; k + 1];
    cuts[k] = blocks;
    for c in (2..=k).rev() {
        cuts[c - 1] = back[c][cuts[c]];
    }

    let mut boundaries = Vec::with_capacity(k - 1);
    for c in 1..k {
        let upper = sorted[block_start[cuts[c]] - 1];
        let lower = sorted[block_start[cuts[c]]];
        boundaries.push(0.5 * (upper + lower));
    }
    assert!(
        boundaries.windows(2).all(|w| w[0] < w[1]),
        "midpoint boundaries must be strictly increasing"
    );

    let mut labels = vec![0usize; n];
    let mut sdcm = 0.0;
    for c in 0..k {
        let lo = block_start[cuts[c]];
        let hi = block_start[cuts[c + 1]];
        sdcm += class_sse(&sorted, lo, hi);
        for pos in lo..hi {
            labels[order[pos]] = c;
        }
    }

    Ok(BreaksClassification {
        k,
        boundaries,
        labels,
        sdcm,
    })
}

/// Bin values against fixed cut points: the label is the count of boundaries
/// strictly below the value, so a value equal to a boundary falls in the
/// lower class.
pub fn assign_classes(values: &[f64], boundaries: &[f64]) -> Result<Vec<usize>, BreaksError> {
    if values.iter().any(|v| !v.is_finite()) || boundaries.iter().any(|b| !b.is_finite()) {
        return Err(BreaksError::NonFinite);
    }
    if boundaries.windows(2).any(|w| w[0] >= w[1]) {
        return Err(BreaksError::UnsortedBoundaries);
    }
    Ok(values
        .iter()
        .map(|&v| boundaries.iter().filter(|&&b| b < v).count())
        .collect())
}

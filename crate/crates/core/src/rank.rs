//! Rank correlation between transfer accuracies and transferability scores,
//! and ordering of candidate sources.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredPair {
    pub task_id: String,
    pub transferability: f64,
    pub accuracy: Option<f64>,
}

impl ScoredPair {
    pub fn new(task_id: impl Into<String>, transferability: f64, accuracy: Option<f64>) -> Result<Self> {
        if let Some(a) = accuracy {
            if !(0.0..=1.0).contains(&a) {
                return Err(Error::InvalidConfig(format!("accuracy {a} outside [0, 1]")));
            }
        }
        Ok(Self {
            task_id: task_id.into(),
            transferability,
            accuracy,
        })
    }
}

fn check_pair<T: Real>(acc: &[T], trf: &[T]) -> Result<()> {
    if acc.len() != trf.len() {
        return Err(Error::LengthMismatch(acc.len(), trf.len()));
    }
    if acc.len() < 2 {
        return Err(Error::DegenerateInput(format!(
            "need at least 2 pairs, got {}",
            acc.len()
        )));
    }
    if acc.iter().chain(trf).any(|v| !v.is_finite()) {
        return Err(Error::DegenerateInput("non-finite value".into()));
    }
    Ok(())
}

/// 1-based ranks; tied values share the mean of the ranks they span.
pub fn average_ranks<T: Real>(values: &[T]) -> Vec<T> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap_or(Ordering::Equal));
    let mut ranks = vec![T::zero(); values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // ranks start+1 ..= end
        let mean = T::lit((start + 1 + end) as f64) / T::lit(2.0);
        for &k in &order[start..end] {
            ranks[k] = mean;
        }
        start = end;
    }
    ranks
}

/// Spearman's rho: Pearson correlation of average ranks. Without ties this
/// is exactly `1 - 6 sum d^2 / (n (n^2 - 1))`.
pub fn spearman_rho<T: Real>(acc: &[T], trf: &[T]) -> Result<T> {
    check_pair(acc, trf)?;
    let ra = average_ranks(acc);
    let rb = average_ranks(trf);
    let n = T::lit(acc.len() as f64);
    let mean = (n + T::one()) / T::lit(2.0);
    let (mut sab, mut saa, mut sbb) = (T::zero(), T::zero(), T::zero());
    for (&a, &b) in ra.iter().zip(&rb) {
        let (da, db) = (a - mean, b - mean);
        sab = sab + da * db;
        saa = saa + da * da;
        sbb = sbb + db * db;
    }
    if saa == T::zero() || sbb == T::zero() {
        return Err(Error::DegenerateInput("all values tied; rank variance is zero".into()));
    }
    let rho = sab / (saa * sbb).sqrt();
    Ok(rho.max(-T::one()).min(T::one()))
}

/// Kendall's tau in the form `2 / (n (n-1)) * sum_{i<j} sgn(dA) sgn(dT)`.
/// Pairs tied in either sequence contribute zero (tau-a).
///
/// Runs in `O(n log n)` via a merge-sort count of discordant pairs.
pub fn kendall_tau<T: Real>(acc: &[T], trf: &[T]) -> Result<T> {
    check_pair(acc, trf)?;
    let s = kendall_numerator(acc, trf);
    let n = acc.len() as i64;
    let pairs = n * (n - 1) / 2;
    Ok(T::lit(s as f64) / T::lit(pairs as f64))
}

/// `sum_{i<j} sgn(a_i - a_j) sgn(b_i - b_j)` as an exact integer.
pub(crate) fn kendall_numerator<T: Real>(a: &[T], b: &[T]) -> i64 {
    let cmp = |x: T, y: T| x.partial_cmp(&y).unwrap_or(Ordering::Equal);
    let mut idx: Vec<usize> = (0..a.len()).collect();
    idx.sort_by(|&i, &j| cmp(a[i], a[j]).then(cmp(b[i], b[j])));

    let n = a.len() as i64;
    let total = n * (n - 1) / 2;
    // pairs tied in a, and tied in both
    let (mut tied_a, mut tied_ab) = (0i64, 0i64);
    let mut i = 0;
    while i < idx.len() {
        let mut j = i + 1;
        while j < idx.len() && a[idx[j]] == a[idx[i]] {
            j += 1;
        }
        let run = (j - i) as i64;
        tied_a += run * (run - 1) / 2;
        let mut k = i;
        while k < j {
            let mut l = k + 1;
            while l < j && b[idx[l]] == b[idx[k]] {
                l += 1;
            }
            let r = (l - k) as i64;
            tied_ab += r * (r - 1) / 2;
            k = l;
        }
        i = j;
    }

    // sort by b, counting strict inversions (discordant pairs)
    let mut seq: Vec<T> = idx.iter().map(|&k| b[k]).collect();
    let mut buf = seq.clone();
    let discordant = merge_count(&mut seq, &mut buf);

    let mut tied_b = 0i64;
    let mut i = 0;
    while i < seq.len() {
        let mut j = i + 1;
        while j < seq.len() && seq[j] == seq[i] {
            j += 1;
        }
        let run = (j - i) as i64;
        tied_b += run * (run - 1) / 2;
        i = j;
    }

    let concordant = total - tied_a - tied_b + tied_ab - discordant;
    concordant - discordant
}

/// Sorts `xs` ascending, returning the number of pairs `i < j` with `xs[i] > xs[j]`.
fn merge_count<T: Real>(xs: &mut [T], buf: &mut [T]) -> i64 {
    let n = xs.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut swaps = {
        let (l, r) = xs.split_at_mut(mid);
        let (bl, br) = buf.split_at_mut(mid);
        merge_count(l, bl) + merge_count(r, br)
    };
    let (mut i, mut j, mut k) = (0, mid, 0);
    while i < mid && j < n {
        if xs[j] < xs[i] {
            buf[k] = xs[j];
            swaps += (mid - i) as i64;
            j += 1;
        } else {
            buf[k] = xs[i];
            i += 1;
        }
        k += 1;
    }
    buf[k..k + (mid - i)].copy_from_slice(&xs[i..mid]);
    k += mid - i;
    buf[k..k + (n - j)].copy_from_slice(&xs[j..n]);
    xs.copy_from_slice(&buf[..n]);
    swaps
}

/// Orders pairs by descending transferability; equal scores fall back to
/// ascending `task_id`.
pub fn rank_sources(mut pairs: Vec<ScoredPair>) -> Result<Vec<ScoredPair>> {
    if pairs.is_empty() {
        return Err(Error::EmptyInput("no scored sources to rank".into()));
    }
    pairs.sort_by(|a, b| {
        b.transferability
            .partial_cmp(&a.transferability)
            .unwrap_or(Ordering::Equal)
            .then_with(|| a.task_id.cmp(&b.task_id))
    });
    Ok(pairs)
}

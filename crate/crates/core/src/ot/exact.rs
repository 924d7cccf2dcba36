use itertools::Itertools;

use super::CostMatrix;
use crate::error::{Error, Result};
use crate::scalar::Real;

pub const BRUTEFORCE_MAX_N: usize = 8;

/// Exact OT between two uniform `n`-point measures by enumerating all `n!`
/// permutations (the optimum of the assignment LP sits on a permutation
/// matrix). Returns `(min_sigma (1/n) sum_i cost[i][sigma(i)], sigma)`; the
/// lexicographically first minimizer wins ties.
pub fn exact_ot_bruteforce<T: Real>(cost: &CostMatrix<T>) -> Result<(T, Vec<usize>)> {
    let (m, n) = cost.shape();
    if m != n {
        return Err(Error::DimensionMismatch(format!(
            "brute force needs a square cost, got {m}x{n}"
        )));
    }
    if n > BRUTEFORCE_MAX_N {
        return Err(Error::TooLarge {
            n,
            max: BRUTEFORCE_MAX_N,
        });
    }
    if n == 0 {
        return Err(Error::EmptyInput("empty cost matrix".into()));
    }
    let c = cost.values();
    let mut best: Option<(T, Vec<usize>)> = None;
    for perm in (0..n).permutations(n) {
        let total = perm.iter().enumerate().map(|(i, &j)| c[[i, j]]).sum::<T>();
        if best.as_ref().is_none_or(|(b, _)| total < *b) {
            best = Some((total, perm));
        }
    }
    let (total, perm) = best.expect("n >= 1");
    Ok((total / T::lit(n as f64), perm))
}

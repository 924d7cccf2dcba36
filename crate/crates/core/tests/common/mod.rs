#![allow(dead_code)]

use ndarray::Array2;
use otce::FeatureSet;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut ChaCha20Rng, rows: usize, cols: usize) -> Array2<f64> {
    Array2::from_shape_simple_fn((rows, cols), || rng.sample::<f64, _>(StandardNormal))
}

pub fn uniform_cost(rng: &mut ChaCha20Rng, rows: usize, cols: usize) -> Array2<f64> {
    Array2::from_shape_simple_fn((rows, cols), || rng.random::<f64>())
}

/// Labels with every class present at least once when `n >= classes`.
pub fn labels(rng: &mut ChaCha20Rng, n: usize, classes: usize) -> Vec<u32> {
    (0..n)
        .map(|i| {
            if i < classes {
                i as u32
            } else {
                rng.random_range(0..classes as u32)
            }
        })
        .collect()
}

pub fn random_set(rng: &mut ChaCha20Rng, n: usize, d: usize, classes: usize) -> FeatureSet<f64> {
    let x = gaussian(rng, n, d);
    let y = labels(rng, n, classes);
    FeatureSet::new("random", x, y, classes).unwrap()
}

/// Naive `-H(Yt | Ys)` from an explicit plan; shares no code with the crate.
pub fn nce_oracle(plan: &Array2<f64>, ys: &[u32], yt: &[u32]) -> f64 {
    let cs = *ys.iter().max().unwrap() as usize + 1;
    let ct = *yt.iter().max().unwrap() as usize + 1;
    let mut joint = vec![vec![0.0; ct]; cs];
    for i in 0..ys.len() {
        for j in 0..yt.len() {
            joint[ys[i] as usize][yt[j] as usize] += plan[[i, j]];
        }
    }
    let mut s = 0.0;
    for row in &joint {
        let pa: f64 = row.iter().sum();
        for &p in row {
            if p > 0.0 {
                s += p * (p / pa).ln();
            }
        }
    }
    s
}

/// Plain-domain Sinkhorn with exactly `iters` (u, v) updates, uniform weights.
pub fn naive_sinkhorn(cost: &Array2<f64>, lambda: f64, iters: usize) -> Array2<f64> {
    let (m, n) = cost.dim();
    let k = cost.mapv(|c| (-c / lambda).exp());
    let (mu, nu) = (1.0 / m as f64, 1.0 / n as f64);
    let mut v = vec![1.0; n];
    let mut u = vec![1.0; m];
    for _ in 0..iters {
        for i in 0..m {
            u[i] = mu / (0..n).map(|j| k[[i, j]] * v[j]).sum::<f64>();
        }
        for j in 0..n {
            v[j] = nu / (0..m).map(|i| k[[i, j]] * u[i]).sum::<f64>();
        }
    }
    Array2::from_shape_fn((m, n), |(i, j)| u[i] * k[[i, j]] * v[j])
}

pub fn sq_dist(xs: &Array2<f64>, xt: &Array2<f64>) -> Array2<f64> {
    Array2::from_shape_fn((xs.nrows(), xt.nrows()), |(i, j)| {
        xs.row(i).iter().zip(xt.row(j)).map(|(a, b)| (a - b) * (a - b)).sum()
    })
}

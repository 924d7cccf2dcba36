//! Seeded synthetic source/target task pairs.
//!
//! Source classes are unit-variance isotropic Gaussian clusters whose
//! centroids sit on a regular simplex with edge `centroid_separation`. The
//! target reuses the source samples, moved by a seeded rigid transform
//! (rotation by an angle proportional to `domain_shift` plus a translation of
//! norm `domain_shift`), and then has a fraction of its labels redrawn.
//!
//! All randomness comes from ChaCha20 seeded with `seed`; draws happen in a
//! fixed order independent of the knob values, so two specs that differ only
//! in `domain_shift` or `label_permutation_fraction` share their base samples.

use ndarray::{Array1, Array2};
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::data::FeatureSet;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Rotation angle (radians) per unit of `domain_shift`.
pub const ROTATION_PER_SHIFT: f64 = std::f64::consts::PI / 12.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticTaskSpec {
    pub classes: usize,
    pub dim: usize,
    pub samples_per_class: usize,
    /// Pairwise centroid distance in units of the cluster sigma.
    pub centroid_separation: f64,
    pub domain_shift: f64,
    pub label_permutation_fraction: f64,
    pub seed: u64,
}

impl SyntheticTaskSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.classes < 2 {
            return bad(format!("classes must be >= 2, got {}", self.classes));
        }
        if self.dim == 0 || self.samples_per_class == 0 {
            return bad("dim and samples_per_class must be >= 1".into());
        }
        if !(self.centroid_separation > 0.0) || !self.centroid_separation.is_finite() {
            return bad(format!(
                "centroid_separation must be positive, got {}",
                self.centroid_separation
            ));
        }
        if !(self.domain_shift >= 0.0) || !self.domain_shift.is_finite() {
            return bad(format!("domain_shift must be non-negative, got {}", self.domain_shift));
        }
        if !(0.0..=1.0).contains(&self.label_permutation_fraction) {
            return bad(format!(
                "label_permutation_fraction must lie in [0, 1], got {}",
                self.label_permutation_fraction
            ));
        }
        Ok(())
    }
}

/// Centroids of a regular simplex with edge `separation`, expressed in the
/// Helmert basis of the sum-zero subspace and zero-padded to `dim`.
pub fn simplex_centroids(classes: usize, dim: usize, separation: f64) -> Result<Array2<f64>> {
    if classes == 0 || dim + 1 < classes {
        return Err(Error::InfeasibleSeparation {
            classes,
            dim,
            separation,
        });
    }
    let scale = separation / std::f64::consts::SQRT_2;
    let mut c = Array2::zeros((classes, dim));
    for k in 1..classes {
        let norm = ((k * (k + 1)) as f64).sqrt();
        for i in 0..k {
            c[[i, k - 1]] = scale / norm;
        }
        c[[k, k - 1]] = -scale * k as f64 / norm;
    }
    Ok(c)
}

fn gaussian_matrix(rng: &mut ChaCha20Rng, rows: usize, cols: usize) -> Array2<f64> {
    Array2::from_shape_simple_fn((rows, cols), || rng.sample::<f64, _>(StandardNormal))
}

/// Orthonormalizes the columns of `a` (modified Gram-Schmidt).
fn orthonormal_columns(mut a: Array2<f64>) -> Array2<f64> {
    let d = a.ncols();
    for k in 0..d {
        for p in 0..k {
            let dot = a.column(k).dot(&a.column(p));
            let prev = a.column(p).to_owned();
            a.column_mut(k).scaled_add(-dot, &prev);
        }
        let norm = a.column(k).dot(&a.column(k)).sqrt();
        a.column_mut(k).mapv_inplace(|v| v / norm);
    }
    a
}

/// `Q diag(R(theta), R(theta), ...) Q^T`; odd dimensions keep one fixed axis.
fn rotation(basis: &Array2<f64>, theta: f64) -> Array2<f64> {
    let d = basis.nrows();
    let mut blocks = Array2::<f64>::eye(d);
    let (s, c) = theta.sin_cos();
    for p in 0..d / 2 {
        let (a, b) = (2 * p, 2 * p + 1);
        blocks[[a, a]] = c;
        blocks[[a, b]] = -s;
        blocks[[b, a]] = s;
        blocks[[b, b]] = c;
    }
    basis.dot(&blocks).dot(&basis.t())
}

pub fn generate_task_pair<T: Real>(spec: &SyntheticTaskSpec) -> Result<(FeatureSet<T>, FeatureSet<T>)> {
    spec.validate()?;
    let centroids = simplex_centroids(spec.classes, spec.dim, spec.centroid_separation)?;
    let mut rng = ChaCha20Rng::seed_from_u64(spec.seed);
    let n = spec.classes * spec.samples_per_class;
    let d = spec.dim;

    let labels: Vec<u32> = (0..spec.classes as u32)
        .flat_map(|k| std::iter::repeat_n(k, spec.samples_per_class))
        .collect();
    let mut xs = gaussian_matrix(&mut rng, n, d);
    for (mut row, &l) in xs.rows_mut().into_iter().zip(&labels) {
        row += &centroids.row(l as usize);
    }

    let basis = orthonormal_columns(gaussian_matrix(&mut rng, d, d));
    let direction: Array1<f64> = Array1::from_shape_simple_fn(d, || rng.sample::<f64, _>(StandardNormal));
    let xt = if spec.domain_shift > 0.0 {
        let r = rotation(&basis, spec.domain_shift * ROTATION_PER_SHIFT);
        let shift = &direction * (spec.domain_shift / direction.dot(&direction).sqrt());
        let mut xt = xs.dot(&r.t());
        for mut row in xt.rows_mut() {
            row += &shift;
        }
        xt
    } else {
        xs.clone()
    };

    let flips = (spec.label_permutation_fraction * n as f64).round() as usize;
    let mut target_labels = labels.clone();
    for i in index::sample(&mut rng, n, flips.min(n)).into_iter() {
        target_labels[i] = rng.random_range(0..spec.classes as u32);
    }

    let src = FeatureSet::new("source", xs.mapv(T::lit), labels, spec.classes)?;
    let tgt = FeatureSet::new("target", xt.mapv(T::lit), target_labels, spec.classes)?;
    Ok((src, tgt))
}

/// Offset of model A's class clouds from the vertical axis in [`make_two_source_toy`].
pub const TOY_COLLAPSE_OFFSET: f64 = 0.0175;

/// Two 2-class source embeddings of the same 8 samples and one target task,
/// built so that sample-level OT cannot separate the sources but class-level
/// geometry can.
///
/// Target: class 0 = `(-2, 0), (-2, 1), (-2, 2), (-0.5, 6)`, class 1 = the
/// mirror image `(2, 0), (2, 1), (2, 2), (0.5, 6)`.
///
/// Source B copies the target geometry but swaps the two points near
/// `(0, 6)` between the classes: each class is three quarters aligned with
/// one target class, and its class cloud is close to that target class in
/// Wasserstein distance.
///
/// Source A collapses both classes onto the vertical axis, class 0 at
/// `x = -0.0175` and class 1 at `x = +0.0175`, with the same heights as the
/// target points. Every source point is almost equidistant from both target
/// classes, so the entropic plan splits its mass roughly 3:1; the offset is
/// chosen so A's F-OTCE matches B's. A's class clouds are almost equally
/// far from both target classes, so label distances do not help A.
pub fn make_two_source_toy<T: Real>() -> (FeatureSet<T>, FeatureSet<T>, FeatureSet<T>) {
    let labels = vec![0, 0, 0, 0, 1, 1, 1, 1];
    let build = |name: &str, pts: [[f64; 2]; 8]| {
        let x = Array2::from_shape_fn((8, 2), |(i, k)| T::lit(pts[i][k]));
        FeatureSet::new(name, x, labels.clone(), 2).expect("valid toy")
    };
    let target = build(
        "toy-target",
        [
            [-2.0, 0.0],
            [-2.0, 1.0],
            [-2.0, 2.0],
            [-0.5, 6.0],
            [2.0, 0.0],
            [2.0, 1.0],
            [2.0, 2.0],
            [0.5, 6.0],
        ],
    );
    let model_b = build(
        "toy-source-b",
        [
            [-2.0, 0.0],
            [-2.0, 1.0],
            [-2.0, 2.0],
            [0.5, 6.0],
            [2.0, 0.0],
            [2.0, 1.0],
            [2.0, 2.0],
            [-0.5, 6.0],
        ],
    );
    let e = TOY_COLLAPSE_OFFSET;
    let model_a = build(
        "toy-source-a",
        [
            [-e, 0.0],
            [-e, 1.0],
            [-e, 2.0],
            [-e, 6.0],
            [e, 0.0],
            [e, 1.0],
            [e, 2.0],
            [e, 6.0],
        ],
    );
    (model_a, model_b, target)
}

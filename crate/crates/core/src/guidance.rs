//! Gradient ascent on F-OTCE with respect to target embeddings.
//!
//! The objective is F-OTCE evaluated after exactly `K` log-domain Sinkhorn
//! update pairs. The gradient is the exact reverse-mode derivative of that
//! unrolled computation: cost -> K (f, g) updates -> plan -> label joint ->
//! negative conditional entropy. Source embeddings stay frozen.

use ndarray::{Array2, ArrayView2, Axis};
use rand::seq::{index, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::data::FeatureSet;
use crate::error::{Error, Result};
use crate::metrics::{accumulate_joint, nce_of};
use crate::ot::{log_sinkhorn, squared_euclidean_cost, SinkhornConfig};
use crate::scalar::Real;

/// Consecutive steps with a large drop before a run is declared divergent.
pub const DIVERGENCE_WINDOW: usize = 10;
/// Minimum per-step drop in the mini-batch objective that counts towards divergence.
pub const DIVERGENCE_DROP: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradConfig {
    /// Only `lambda` is used; the unrolled solve never stops early.
    pub sinkhorn: SinkhornConfig,
    pub unroll_iterations: usize,
    pub learning_rate: f64,
    pub steps: usize,
    pub source_batch: usize,
    pub target_batch: usize,
    pub seed: u64,
}

impl Default for GradConfig {
    fn default() -> Self {
        Self {
            sinkhorn: SinkhornConfig::default(),
            unroll_iterations: 100,
            learning_rate: 0.01,
            steps: 100,
            source_batch: 256,
            target_batch: 25,
            seed: 0,
        }
    }
}

impl GradConfig {
    pub fn validate(&self) -> Result<()> {
        self.sinkhorn.validate()?;
        if self.unroll_iterations == 0 {
            return Err(Error::InvalidConfig("unroll iterations must be >= 1".into()));
        }
        if !(self.learning_rate >= 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "learning rate must be finite and non-negative, got {}",
                self.learning_rate
            )));
        }
        if self.source_batch == 0 || self.target_batch == 0 {
            return Err(Error::InvalidConfig("batch sizes must be >= 1".into()));
        }
        Ok(())
    }
}

/// F-OTCE after `K` unrolled Sinkhorn iterations and its gradient with
/// respect to `xt`.
pub fn f_otce_value_and_grad<T: Real>(
    xs: ArrayView2<'_, T>,
    ys: &[u32],
    xt: ArrayView2<'_, T>,
    yt: &[u32],
    config: &GradConfig,
) -> Result<(T, Array2<T>)> {
    config.validate()?;
    let (m, n) = (xs.nrows(), xt.nrows());
    if ys.len() != m || yt.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "{m} source rows with {} labels, {n} target rows with {} labels",
            ys.len(),
            yt.len()
        )));
    }
    if m == 0 || n == 0 {
        return Err(Error::EmptyInput("empty batch".into()));
    }
    let cs = *ys.iter().max().expect("non-empty") as usize + 1;
    let ct = *yt.iter().max().expect("non-empty") as usize + 1;
    let lambda = T::lit(config.sinkhorn.lambda);
    let inv = T::one() / lambda;

    let cost = squared_euclidean_cost(xs, xt)?.into_inner();
    let log_mu = vec![(T::one() / T::lit(m as f64)).ln(); m];
    let log_nu = vec![(T::one() / T::lit(n as f64)).ln(); n];
    let run = log_sinkhorn(
        cost.view(),
        &log_mu,
        &log_nu,
        lambda,
        config.unroll_iterations,
        None,
        true,
    );
    let plan = run.plan(cost.view(), lambda);
    let joint = accumulate_joint(plan.view(), ys, yt, cs, ct);
    let value = nce_of(joint.view());

    // d value / d joint = (log(P(a,b) / P(a)) - value) / total
    let total: T = joint.iter().copied().sum();
    let mut joint_bar = Array2::<T>::zeros((cs, ct));
    for (row, mut out) in joint.rows().into_iter().zip(joint_bar.rows_mut()) {
        let marginal: T = row.iter().copied().sum();
        if marginal <= T::zero() {
            continue;
        }
        for (&p, o) in row.iter().zip(out.iter_mut()) {
            if p > T::zero() {
                *o = ((p / marginal).ln() - value) / total;
            }
        }
    }

    // pi_ij = exp((f_i + g_j - C_ij) / lambda)
    let mut cost_bar = Array2::<T>::zeros((m, n));
    let mut f_bar = vec![T::zero(); m];
    let mut g_bar = vec![T::zero(); n];
    for i in 0..m {
        let a = ys[i] as usize;
        for j in 0..n {
            let w = joint_bar[[a, yt[j] as usize]] * plan[[i, j]] * inv;
            f_bar[i] = f_bar[i] + w;
            g_bar[j] = g_bar[j] + w;
            cost_bar[[i, j]] = -w;
        }
    }

    let zeros = vec![T::zero(); n];
    for k in (0..run.history.len()).rev() {
        let (f, g) = &run.history[k];
        let g_prev = if k == 0 { &zeros } else { &run.history[k - 1].1 };

        // g_j = lambda log nu_j - lambda LSE_i((f_i - C_ij) / lambda)
        for i in 0..m {
            let mut acc = T::zero();
            for j in 0..n {
                let q = ((f[i] - cost[[i, j]] + g[j]) * inv - log_nu[j]).exp();
                acc = acc + g_bar[j] * q;
                cost_bar[[i, j]] = cost_bar[[i, j]] + g_bar[j] * q;
            }
            f_bar[i] = f_bar[i] - acc;
        }

        // f_i = lambda log mu_i - lambda LSE_j((g_prev_j - C_ij) / lambda)
        let mut g_prev_bar = vec![T::zero(); n];
        for i in 0..m {
            for j in 0..n {
                let r = ((g_prev[j] - cost[[i, j]] + f[i]) * inv - log_mu[i]).exp();
                g_prev_bar[j] = g_prev_bar[j] - f_bar[i] * r;
                cost_bar[[i, j]] = cost_bar[[i, j]] + f_bar[i] * r;
            }
        }
        g_bar = g_prev_bar;
        f_bar.iter_mut().for_each(|v| *v = T::zero());
    }

    // C_ij = |xs_i - xt_j|^2  =>  dC_ij / d xt_j = 2 (xt_j - xs_i)
    let two = T::lit(2.0);
    let mut grad = Array2::<T>::zeros(xt.raw_dim());
    for j in 0..n {
        let mut weight = T::zero();
        let mut out = grad.row_mut(j);
        for i in 0..m {
            let c = cost_bar[[i, j]];
            weight = weight + c;
            for (o, &x) in out.iter_mut().zip(xs.row(i)) {
                *o = *o - c * x;
            }
        }
        for (o, &x) in out.iter_mut().zip(xt.row(j)) {
            *o = two * (*o + weight * x);
        }
    }

    if !value.is_finite() || grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::NonFiniteGradient {
            lambda: config.sinkhorn.lambda,
        });
    }
    Ok((value, grad))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub step: usize,
    /// Mini-batch objective before the update.
    pub f_otce: f64,
    pub grad_norm: f64,
}

#[derive(Debug, Clone)]
pub struct OptimizationRun<T: Real = f64> {
    pub target: FeatureSet<T>,
    pub trace: Vec<TraceRow>,
}

/// Plain gradient ascent on the target embeddings, one mini-batch pair per
/// step. Target batches walk a seeded permutation (one epoch per pass);
/// source batches are drawn without replacement at every step.
pub fn optimize_target_embeddings<T: Real>(
    src: &FeatureSet<T>,
    tgt: &FeatureSet<T>,
    config: &GradConfig,
) -> Result<OptimizationRun<T>> {
    config.validate()?;
    if src.dim() != tgt.dim() {
        return Err(Error::DimensionMismatch(format!(
            "source has d = {} but target has d = {}",
            src.dim(),
            tgt.dim()
        )));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(config.seed);
    let mut xt = tgt.features().to_owned();
    let (m, n) = (src.len(), tgt.len());
    let lr = T::lit(config.learning_rate);

    let mut order: Vec<usize> = (0..n).collect();
    let mut cursor = n;
    let mut trace = Vec::with_capacity(config.steps);
    let mut drops = 0;

    for step in 0..config.steps {
        if cursor >= n {
            order.shuffle(&mut rng);
            cursor = 0;
        }
        let end = (cursor + config.target_batch).min(n);
        let mut tb = order[cursor..end].to_vec();
        tb.sort_unstable();
        cursor = end;
        let sb: Vec<usize> = if m <= config.source_batch {
            (0..m).collect()
        } else {
            let mut s = index::sample(&mut rng, m, config.source_batch).into_vec();
            s.sort_unstable();
            s
        };

        let xs_b = src.features().select(Axis(0), &sb);
        let ys_b: Vec<u32> = sb.iter().map(|&i| src.labels()[i]).collect();
        let xt_b = xt.select(Axis(0), &tb);
        let yt_b: Vec<u32> = tb.iter().map(|&j| tgt.labels()[j]).collect();

        let (value, grad) = f_otce_value_and_grad(xs_b.view(), &ys_b, xt_b.view(), &yt_b, config)?;
        for (row, &j) in grad.rows().into_iter().zip(&tb) {
            for (x, &g) in xt.row_mut(j).iter_mut().zip(row) {
                *x = *x + lr * g;
            }
        }
        let value = value.as_f64();
        let grad_norm = grad.iter().map(|g| g.as_f64().powi(2)).sum::<f64>().sqrt();
        if let Some(prev) = trace.last().map(|r: &TraceRow| r.f_otce) {
            if prev - value > DIVERGENCE_DROP {
                drops += 1;
                if drops >= DIVERGENCE_WINDOW {
                    return Err(Error::DivergenceDetected { step });
                }
            } else {
                drops = 0;
            }
        }
        trace.push(TraceRow {
            step,
            f_otce: value,
            grad_norm,
        });
    }
    Ok(OptimizationRun {
        target: tgt.with_features(xt)?,
        trace,
    })
}

/// Accuracy of a nearest-class-centroid classifier fit on `train` and
/// evaluated on `test`. Distance ties go to the smaller class index.
pub fn nearest_centroid_probe<T: Real>(train: &FeatureSet<T>, test: &FeatureSet<T>) -> Result<f64> {
    if train.dim() != test.dim() {
        return Err(Error::DimensionMismatch(format!(
            "train has d = {} but test has d = {}",
            train.dim(),
            test.dim()
        )));
    }
    let counts = train.class_counts();
    for class in test.present_classes() {
        if counts.get(class).copied().unwrap_or(0) == 0 {
            return Err(Error::MissingClass { class });
        }
    }
    let d = train.dim();
    let mut centroids = Array2::<T>::zeros((counts.len(), d));
    for (row, &l) in train.features().rows().into_iter().zip(train.labels()) {
        let mut c = centroids.row_mut(l as usize);
        for (c, &x) in c.iter_mut().zip(row) {
            *c = *c + x;
        }
    }
    for (mut c, &k) in centroids.rows_mut().into_iter().zip(&counts) {
        if k > 0 {
            let k = T::lit(k as f64);
            c.iter_mut().for_each(|v| *v = *v / k);
        }
    }
    let mut correct = 0usize;
    for (row, &l) in test.features().rows().into_iter().zip(test.labels()) {
        let mut best: Option<(T, usize)> = None;
        for (class, c) in centroids.rows().into_iter().enumerate() {
            if counts[class] == 0 {
                continue;
            }
            let dist = row
                .iter()
                .zip(c)
                .fold(T::zero(), |acc, (&a, &b)| acc + (a - b) * (a - b));
            if best.is_none_or(|(b, _)| dist < b) {
                best = Some((dist, class));
            }
        }
        if best.map(|(_, c)| c) == Some(l as usize) {
            correct += 1;
        }
    }
    Ok(correct as f64 / test.len() as f64)
}

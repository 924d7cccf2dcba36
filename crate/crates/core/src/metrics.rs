//! Transferability scores built on optimal transport.
//!
//! * F-OTCE: couple source and target samples by entropic OT under squared
//!   Euclidean cost, aggregate the plan into a joint label distribution and
//!   report the negative conditional entropy `-H(Y_t | Y_s)`.
//! * JC-OTCE: same, with the ground cost mixed with a class-to-class
//!   Wasserstein distance, `gamma * |x_s - x_t|^2 + (1 - gamma) * W(y_s, y_t)`.
//! * NCE: the paired-sample special case (identity coupling).
//!
//! Every score lies in `[-log C_t, 0]`; higher means more transferable.

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::data::{standardize_pair, FeatureSet};
use crate::error::{Error, Result};
use crate::ot::{
    mass_tolerance, sinkhorn, squared_euclidean_cost, uniform_marginal, CostMatrix, Coupling, SinkhornConfig,
};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricConfig {
    pub sinkhorn: SinkhornConfig,
    /// Weight of the sample term in the JC-OTCE ground cost.
    pub gamma: f64,
    pub standardize_features: bool,
}

impl Default for MetricConfig {
    fn default() -> Self {
        Self {
            sinkhorn: SinkhornConfig::default(),
            gamma: 0.5,
            standardize_features: false,
        }
    }
}

impl MetricConfig {
    pub fn with_lambda(lambda: f64) -> Self {
        Self {
            sinkhorn: SinkhornConfig::with_lambda(lambda),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.sinkhorn.validate()?;
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::InvalidConfig(format!(
                "gamma must lie in [0, 1], got {}",
                self.gamma
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MetricId {
    #[serde(rename = "f-otce")]
    FOtce,
    #[serde(rename = "jc-otce")]
    JcOtce,
    #[serde(rename = "nce")]
    Nce,
}

impl std::fmt::Display for MetricId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            MetricId::FOtce => "f-otce",
            MetricId::JcOtce => "jc-otce",
            MetricId::Nce => "nce",
        })
    }
}

/// A metric value with the solver settings that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferabilityScore {
    pub metric: MetricId,
    pub value: f64,
    pub lambda: f64,
    /// Present only for JC-OTCE.
    pub gamma: Option<f64>,
    pub iterations_used: usize,
    pub converged: bool,
}

/// Empirical `P(y_s, y_t)` induced by a coupling, `C_s x C_t`.
#[derive(Debug, Clone, PartialEq)]
pub struct JointLabelDistribution<T: Real = f64>(Array2<T>);

impl<T: Real> JointLabelDistribution<T> {
    pub fn new(values: Array2<T>) -> Result<Self> {
        if values.iter().any(|&v| !(v >= T::zero()) || !v.is_finite()) {
            return Err(Error::InvalidConfig(
                "joint distribution has negative or non-finite entries".into(),
            ));
        }
        let total: f64 = values.iter().map(|v| v.as_f64()).sum();
        if (total - 1.0).abs() > mass_tolerance::<T>() {
            return Err(Error::InvalidConfig(format!("joint distribution sums to {total}")));
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> ArrayView2<'_, T> {
        self.0.view()
    }

    /// `P(y_s)`.
    pub fn source_marginal(&self) -> Vec<T> {
        self.0.rows().into_iter().map(|r| r.iter().copied().sum()).collect()
    }

    pub fn total(&self) -> T {
        self.0.iter().copied().sum()
    }
}

/// Class-to-class Wasserstein distances. Rows or columns of absent classes
/// hold `+inf`.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelDistanceMatrix<T: Real = f64>(Array2<T>);

impl<T: Real> LabelDistanceMatrix<T> {
    pub fn values(&self) -> ArrayView2<'_, T> {
        self.0.view()
    }

    pub fn get(&self, source_class: usize, target_class: usize) -> T {
        self.0[[source_class, target_class]]
    }
}

/// Sums plan mass into label cells: `P(a, b) = sum_{i: ys_i = a, j: yt_j = b} pi_ij`.
pub fn joint_label_distribution<T: Real>(
    coupling: &Coupling<T>,
    ys: &[u32],
    yt: &[u32],
    source_classes: usize,
    target_classes: usize,
) -> Result<JointLabelDistribution<T>> {
    let (m, n) = coupling.shape();
    if ys.len() != m || yt.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "coupling {m}x{n} with {} source and {} target labels",
            ys.len(),
            yt.len()
        )));
    }
    check_labels(ys, source_classes)?;
    check_labels(yt, target_classes)?;
    let joint = accumulate_joint(coupling.values(), ys, yt, source_classes, target_classes);
    JointLabelDistribution::new(joint)
}

fn check_labels(labels: &[u32], classes: usize) -> Result<()> {
    match labels.iter().enumerate().find(|(_, &l)| l as usize >= classes) {
        Some((record, &l)) => Err(Error::LabelOutOfRange {
            record,
            label: l as i64,
            classes,
        }),
        None => Ok(()),
    }
}

pub(crate) fn accumulate_joint<T: Real>(
    plan: ArrayView2<'_, T>,
    ys: &[u32],
    yt: &[u32],
    source_classes: usize,
    target_classes: usize,
) -> Array2<T> {
    let mut joint = Array2::zeros((source_classes, target_classes));
    let mut row_buf = vec![T::zero(); target_classes];
    for (row, &a) in plan.rows().into_iter().zip(ys) {
        row_buf.iter_mut().for_each(|v| *v = T::zero());
        for (&p, &b) in row.iter().zip(yt) {
            row_buf[b as usize] = row_buf[b as usize] + p;
        }
        let mut dst = joint.row_mut(a as usize);
        for (d, &v) in dst.iter_mut().zip(&row_buf) {
            *d = *d + v;
        }
    }
    joint
}

/// `sum_{a,b} P(a,b) log(P(a,b) / P(a))`, with `0 log 0 = 0`.
///
/// The mass is renormalized first so that rounding in the plan cannot push
/// the value outside `[-log C_t, 0]`.
pub fn negative_conditional_entropy<T: Real>(joint: &JointLabelDistribution<T>) -> T {
    nce_of(joint.values())
}

pub(crate) fn nce_of<T: Real>(joint: ArrayView2<'_, T>) -> T {
    let total: T = joint.iter().copied().sum();
    let mut acc = T::zero();
    for row in joint.rows() {
        let marginal: T = row.iter().copied().sum();
        if marginal <= T::zero() {
            continue;
        }
        for &p in row.iter() {
            if p > T::zero() {
                acc = acc + (p / total) * (p / marginal).ln();
            }
        }
    }
    acc.min(T::zero())
}

fn prepare<T: Real>(
    src: &FeatureSet<T>,
    tgt: &FeatureSet<T>,
    config: &MetricConfig,
) -> Result<Option<(FeatureSet<T>, FeatureSet<T>)>> {
    config.validate()?;
    if src.dim() != tgt.dim() {
        return Err(Error::DimensionMismatch(format!(
            "source has d = {} but target has d = {}",
            src.dim(),
            tgt.dim()
        )));
    }
    if config.standardize_features {
        Ok(Some(standardize_pair(src, tgt)?))
    } else {
        Ok(None)
    }
}

fn score_from_cost<T: Real>(
    metric: MetricId,
    cost: &CostMatrix<T>,
    src: &FeatureSet<T>,
    tgt: &FeatureSet<T>,
    config: &MetricConfig,
) -> Result<TransferabilityScore> {
    let mu = uniform_marginal::<T>(src.len());
    let nu = uniform_marginal::<T>(tgt.len());
    let solved = sinkhorn(cost, &mu, &nu, &config.sinkhorn)?;
    let joint = accumulate_joint(
        solved.coupling.values(),
        src.labels(),
        tgt.labels(),
        src.class_count(),
        tgt.class_count(),
    );
    Ok(TransferabilityScore {
        metric,
        value: nce_of(joint.view()).as_f64(),
        lambda: config.sinkhorn.lambda,
        gamma: (metric == MetricId::JcOtce).then_some(config.gamma),
        iterations_used: solved.iterations,
        converged: solved.converged,
    })
}

/// F-OTCE of `src -> tgt`.
pub fn f_otce<T: Real>(
    src: &FeatureSet<T>,
    tgt: &FeatureSet<T>,
    config: &MetricConfig,
) -> Result<TransferabilityScore> {
    let standardized = prepare(src, tgt, config)?;
    let (src, tgt) = standardized.as_ref().map_or((src, tgt), |(a, b)| (a, b));
    let cost = squared_euclidean_cost(src.features(), tgt.features())?;
    score_from_cost(MetricId::FOtce, &cost, src, tgt, config)
}

/// Wasserstein distance between every present source class cloud and every
/// present target class cloud: the unregularized cost `<C, pi*>` of the
/// entropic plan under squared Euclidean ground cost with uniform weights.
pub fn label_distance_matrix<T: Real>(
    src: &FeatureSet<T>,
    tgt: &FeatureSet<T>,
    config: &MetricConfig,
) -> Result<LabelDistanceMatrix<T>> {
    let standardized = prepare(src, tgt, config)?;
    let (src, tgt) = standardized.as_ref().map_or((src, tgt), |(a, b)| (a, b));
    label_distances_unchecked(src, tgt, &config.sinkhorn)
}

fn label_distances_unchecked<T: Real>(
    src: &FeatureSet<T>,
    tgt: &FeatureSet<T>,
    sinkhorn_config: &SinkhornConfig,
) -> Result<LabelDistanceMatrix<T>> {
    let mut values = Array2::from_elem((src.class_count(), tgt.class_count()), T::infinity());
    let target_clouds: Vec<(usize, Array2<T>)> = tgt
        .present_classes()
        .into_iter()
        .map(|b| (b, tgt.class_features(b)))
        .collect();
    for a in src.present_classes() {
        let cloud_a = src.class_features(a);
        let mu = uniform_marginal::<T>(cloud_a.nrows());
        for (b, cloud_b) in &target_clouds {
            let cost = squared_euclidean_cost(cloud_a.view(), cloud_b.view())?;
            let nu = uniform_marginal::<T>(cloud_b.nrows());
            values[[a, *b]] = sinkhorn(&cost, &mu, &nu, sinkhorn_config)?.transport_cost;
        }
    }
    Ok(LabelDistanceMatrix(values))
}

/// JC-OTCE of `src -> tgt`.
pub fn jc_otce<T: Real>(
    src: &FeatureSet<T>,
    tgt: &FeatureSet<T>,
    config: &MetricConfig,
) -> Result<TransferabilityScore> {
    let standardized = prepare(src, tgt, config)?;
    let (src, tgt) = standardized.as_ref().map_or((src, tgt), |(a, b)| (a, b));
    let distances = if config.gamma < 1.0 {
        Some(label_distances_unchecked(src, tgt, &config.sinkhorn)?)
    } else {
        None
    };
    jc_from_parts(src, tgt, distances.as_ref(), config)
}

/// JC-OTCE with precomputed class distances, for callers that score one task
/// pair under several `gamma` values.
pub fn jc_otce_with_distances<T: Real>(
    src: &FeatureSet<T>,
    tgt: &FeatureSet<T>,
    distances: &LabelDistanceMatrix<T>,
    config: &MetricConfig,
) -> Result<TransferabilityScore> {
    let standardized = prepare(src, tgt, config)?;
    let (src, tgt) = standardized.as_ref().map_or((src, tgt), |(a, b)| (a, b));
    if distances.0.dim() != (src.class_count(), tgt.class_count()) {
        return Err(Error::DimensionMismatch(format!(
            "label distances {:?} for class counts ({}, {})",
            distances.0.dim(),
            src.class_count(),
            tgt.class_count()
        )));
    }
    jc_from_parts(src, tgt, Some(distances), config)
}

fn jc_from_parts<T: Real>(
    src: &FeatureSet<T>,
    tgt: &FeatureSet<T>,
    distances: Option<&LabelDistanceMatrix<T>>,
    config: &MetricConfig,
) -> Result<TransferabilityScore> {
    let mut cost = squared_euclidean_cost(src.features(), tgt.features())?.into_inner();
    if let Some(w) = distances {
        let gamma = T::lit(config.gamma);
        let rest = T::one() - gamma;
        for (mut row, &a) in cost.rows_mut().into_iter().zip(src.labels()) {
            for (c, &b) in row.iter_mut().zip(tgt.labels()) {
                *c = gamma * *c + rest * w.get(a as usize, b as usize);
            }
        }
    }
    let cost = CostMatrix::new(cost)?;
    score_from_cost(MetricId::JcOtce, &cost, src, tgt, config)
}

/// Negative conditional entropy of paired labels (sample `i` of both
/// sequences is the same input). Class counts are `max label + 1`.
pub fn nce_paired(ys: &[u32], yt: &[u32]) -> Result<f64> {
    if ys.len() != yt.len() {
        return Err(Error::LengthMismatch(ys.len(), yt.len()));
    }
    if ys.is_empty() {
        return Err(Error::EmptyInput("no paired labels".into()));
    }
    let cs = *ys.iter().max().expect("non-empty") as usize + 1;
    let ct = *yt.iter().max().expect("non-empty") as usize + 1;
    let mut counts = Array2::<f64>::zeros((cs, ct));
    for (&a, &b) in ys.iter().zip(yt) {
        counts[[a as usize, b as usize]] += 1.0;
    }
    let n = ys.len() as f64;
    Ok(nce_of(counts.mapv(|c| c / n).view()))
}

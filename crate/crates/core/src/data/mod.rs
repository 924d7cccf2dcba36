//! Feature sets and their on-disk formats.
//!
//! A [`FeatureSet`] holds the embedded samples of one task: an `n x d`
//! feature matrix, one integer label per row and an explicit class count.
//! Construction validates everything, so a value of this type is always
//! well formed.

mod csv_io;
mod ftrs;

pub use csv_io::{read_csv, read_csv_from};
pub use ftrs::{
    decode_feature_file, encode_feature_file, read_feature_file, write_feature_file, FTRS_HEADER_LEN, FTRS_MAGIC,
    FTRS_VERSION,
};

use ndarray::{Array2, ArrayView2, Axis};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Embedded samples of one task.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSet<T: Real = f64> {
    name: String,
    features: Array2<T>,
    labels: Vec<u32>,
    class_count: usize,
}

impl<T: Real> FeatureSet<T> {
    /// Validates and builds a feature set.
    pub fn new(name: impl Into<String>, features: Array2<T>, labels: Vec<u32>, class_count: usize) -> Result<Self> {
        let (n, d) = features.dim();
        if n == 0 {
            return Err(Error::EmptyInput("feature set has no samples".into()));
        }
        if d == 0 {
            return Err(Error::DimensionMismatch("feature dimension must be >= 1".into()));
        }
        if class_count == 0 {
            return Err(Error::InvalidConfig("class count must be >= 1".into()));
        }
        if labels.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "{} labels for {} feature rows",
                labels.len(),
                n
            )));
        }
        if let Some((record, &label)) = labels.iter().enumerate().find(|(_, &l)| l as usize >= class_count) {
            return Err(Error::LabelOutOfRange {
                record,
                label: label as i64,
                classes: class_count,
            });
        }
        check_finite(features.view())?;
        Ok(Self {
            name: name.into(),
            features,
            labels,
            class_count,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn features(&self) -> ArrayView2<'_, T> {
        self.features.view()
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn len(&self) -> usize {
        self.features.nrows()
    }

    /// Always false for a constructed set; present for API symmetry.
    pub fn is_empty(&self) -> bool {
        self.features.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.features.ncols()
    }

    /// Per-class sample counts, indexed by class.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.class_count];
        for &l in &self.labels {
            counts[l as usize] += 1;
        }
        counts
    }

    /// Classes with at least one sample, ascending. Never empty.
    pub fn present_classes(&self) -> Vec<usize> {
        self.class_counts()
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(k, _)| k)
            .collect()
    }

    /// Row indices belonging to `class`, in sample order.
    pub fn indices_of(&self, class: usize) -> Vec<usize> {
        self.labels
            .iter()
            .enumerate()
            .filter(|(_, &l)| l as usize == class)
            .map(|(i, _)| i)
            .collect()
    }

    /// Features of one class as a new matrix.
    pub fn class_features(&self, class: usize) -> Array2<T> {
        self.features.select(Axis(0), &self.indices_of(class))
    }

    /// Same labels and class count, new features.
    pub fn with_features(&self, features: Array2<T>) -> Result<Self> {
        Self::new(self.name.clone(), features, self.labels.clone(), self.class_count)
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Subset of rows, labels and class count preserved.
    pub fn select(&self, rows: &[usize]) -> Result<Self> {
        let features = self.features.select(Axis(0), rows);
        let labels = rows.iter().map(|&r| self.labels[r]).collect();
        Self::new(self.name.clone(), features, labels, self.class_count)
    }

    pub fn into_parts(self) -> (String, Array2<T>, Vec<u32>, usize) {
        (self.name, self.features, self.labels, self.class_count)
    }

    /// Converts the feature payload to another scalar type.
    pub fn cast<U: Real>(&self) -> Result<FeatureSet<U>> {
        let features = self.features.mapv(|v| U::lit(v.as_f64()));
        FeatureSet::new(self.name.clone(), features, self.labels.clone(), self.class_count)
    }
}

/// Per-dimension z-scoring of two sets using pooled statistics.
///
/// Dimensions with zero pooled variance are only centered.
pub fn standardize_pair<T: Real>(a: &FeatureSet<T>, b: &FeatureSet<T>) -> Result<(FeatureSet<T>, FeatureSet<T>)> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch(format!(
            "feature dimension {} vs {}",
            a.dim(),
            b.dim()
        )));
    }
    let d = a.dim();
    let total = T::lit((a.len() + b.len()) as f64);
    let mut mean = vec![T::zero(); d];
    for row in a.features.rows().into_iter().chain(b.features.rows()) {
        for (m, &v) in mean.iter_mut().zip(row.iter()) {
            *m = *m + v;
        }
    }
    for m in &mut mean {
        *m = *m / total;
    }
    let mut var = vec![T::zero(); d];
    for row in a.features.rows().into_iter().chain(b.features.rows()) {
        for ((s, &v), &m) in var.iter_mut().zip(row.iter()).zip(&mean) {
            *s = *s + (v - m) * (v - m);
        }
    }
    let scale: Vec<T> = var
        .iter()
        .map(|&s| {
            let sd = (s / total).sqrt();
            if sd > T::zero() {
                sd
            } else {
                T::one()
            }
        })
        .collect();
    let apply = |set: &FeatureSet<T>| {
        let mut x = set.features.clone();
        for mut row in x.rows_mut() {
            for ((v, &m), &s) in row.iter_mut().zip(&mean).zip(&scale) {
                *v = (*v - m) / s;
            }
        }
        set.with_features(x)
    };
    Ok((apply(a)?, apply(b)?))
}

pub(crate) fn check_finite<T: Real>(x: ArrayView2<'_, T>) -> Result<()> {
    for (record, row) in x.rows().into_iter().enumerate() {
        if let Some(column) = row.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue { record, column });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn rejects_out_of_range_label() {
        let err = FeatureSet::<f64>::new("x", array![[0.0], [1.0]], vec![0, 3], 3).unwrap_err();
        assert!(matches!(
            err,
            Error::LabelOutOfRange {
                record: 1,
                label: 3,
                classes: 3
            }
        ));
    }

    #[test]
    fn rejects_nan() {
        let err = FeatureSet::<f64>::new("x", array![[0.0, f64::NAN]], vec![0], 1).unwrap_err();
        assert!(matches!(err, Error::NonFiniteValue { record: 0, column: 1 }));
    }

    #[test]
    fn absent_classes_are_allowed() {
        let set = FeatureSet::<f64>::new("x", array![[0.0], [1.0]], vec![0, 4], 5).unwrap();
        assert_eq!(set.present_classes(), vec![0, 4]);
        assert_eq!(set.class_counts(), vec![1, 0, 0, 0, 1]);
    }

    #[test]
    fn standardize_uses_pooled_moments() {
        let a = FeatureSet::<f64>::new("a", array![[0.0, 5.0], [2.0, 5.0]], vec![0, 0], 1).unwrap();
        let b = FeatureSet::<f64>::new("b", array![[4.0, 5.0], [6.0, 5.0]], vec![0, 0], 1).unwrap();
        let (sa, sb) = standardize_pair(&a, &b).unwrap();
        let all: Vec<f64> = sa
            .features()
            .column(0)
            .iter()
            .chain(sb.features().column(0).iter())
            .copied()
            .collect();
        let mean: f64 = all.iter().sum::<f64>() / 4.0;
        let var: f64 = all.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 4.0;
        assert!(mean.abs() < 1e-12);
        assert!((var - 1.0).abs() < 1e-12);
        // constant column is centered only
        assert!(sa.features().column(1).iter().all(|&v| v == 0.0));
    }
}

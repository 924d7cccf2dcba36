use ndarray::{Array2, ArrayView2};

use super::CostMatrix;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Pairwise squared Euclidean distances between the rows of `xs` and `xt`.
///
/// Each entry is accumulated sequentially over the feature axis, so
/// `cost(a, b)` is exactly the transpose of `cost(b, a)`.
pub fn squared_euclidean_cost<T: Real>(xs: ArrayView2<'_, T>, xt: ArrayView2<'_, T>) -> Result<CostMatrix<T>> {
    if xs.ncols() != xt.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "feature dimension {} vs {}",
            xs.ncols(),
            xt.ncols()
        )));
    }
    let (m, n, d) = (xs.nrows(), xt.nrows(), xs.ncols());
    let xs = xs.as_standard_layout();
    let xt = xt.as_standard_layout();
    let xs = xs.as_slice().expect("standard layout");
    let xt = xt.as_slice().expect("standard layout");

    let mut out = Vec::with_capacity(m * n);
    for i in 0..m {
        let a = &xs[i * d..(i + 1) * d];
        for j in 0..n {
            let b = &xt[j * d..(j + 1) * d];
            let mut acc = T::zero();
            for (&p, &q) in a.iter().zip(b) {
                let diff = p - q;
                acc = acc + diff * diff;
            }
            out.push(acc);
        }
    }
    let values = Array2::from_shape_vec((m, n), out).expect("m*n entries");
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidConfig("ground cost overflowed".into()));
    }
    Ok(CostMatrix::new_unchecked(values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn identical_points() {
        let c = squared_euclidean_cost(array![[0.0]].view(), array![[0.0]].view()).unwrap();
        assert_eq!(c.values(), array![[0.0]]);
    }

    #[test]
    fn one_dimensional() {
        let c = squared_euclidean_cost(array![[0.0]].view(), array![[3.0]].view()).unwrap();
        assert_eq!(c.values(), array![[9.0]]);
    }

    #[test]
    fn unit_vectors_to_origin() {
        let c = squared_euclidean_cost(array![[1.0, 0.0], [0.0, 1.0]].view(), array![[0.0, 0.0]].view()).unwrap();
        assert_eq!(c.values(), array![[1.0], [1.0]]);
    }

    #[test]
    fn dimension_mismatch() {
        let r = squared_euclidean_cost(array![[1.0, 0.0]].view(), array![[0.0]].view());
        assert!(matches!(r, Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn works_in_f32() {
        let c = squared_euclidean_cost(array![[1.0f32, 2.0]].view(), array![[4.0f32, 6.0]].view()).unwrap();
        assert_eq!(c.values()[[0, 0]], 25.0f32);
    }
}

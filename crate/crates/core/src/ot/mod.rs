//! Ground costs, the entropic Sinkhorn solver and a brute-force exact solver
//! for small square instances.

mod cost;
mod exact;
mod sinkhorn;

pub use cost::squared_euclidean_cost;
pub use exact::{exact_ot_bruteforce, BRUTEFORCE_MAX_N};
pub use sinkhorn::{sinkhorn, transport_cost, uniform_marginal, SinkhornConfig, SinkhornResult};

pub(crate) use sinkhorn::log_sinkhorn;

use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Dense `m x n` matrix of non-negative, finite ground costs.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix<T: Real = f64>(Array2<T>);

impl<T: Real> CostMatrix<T> {
    pub fn new(values: Array2<T>) -> Result<Self> {
        for ((i, j), &v) in values.indexed_iter() {
            if !v.is_finite() || v < T::zero() {
                return Err(Error::InvalidConfig(format!(
                    "cost entry ({i}, {j}) = {v} is not a finite non-negative number"
                )));
            }
        }
        Ok(Self(values))
    }

    pub(crate) fn new_unchecked(values: Array2<T>) -> Self {
        Self(values)
    }

    pub fn values(&self) -> ArrayView2<'_, T> {
        self.0.view()
    }

    pub fn shape(&self) -> (usize, usize) {
        self.0.dim()
    }

    pub fn into_inner(self) -> Array2<T> {
        self.0
    }
}

/// Transport plan with the marginals it was solved for.
#[derive(Debug, Clone, PartialEq)]
pub struct Coupling<T: Real = f64> {
    values: Array2<T>,
    row_marginal: Vec<T>,
    col_marginal: Vec<T>,
}

impl<T: Real> Coupling<T> {
    /// Builds a coupling; checks non-negativity, unit mass (1e-9) and shapes.
    /// Marginal agreement is the solver's responsibility and is reported, not
    /// enforced, here.
    pub fn new(values: Array2<T>, row_marginal: Vec<T>, col_marginal: Vec<T>) -> Result<Self> {
        let (m, n) = values.dim();
        if row_marginal.len() != m || col_marginal.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "coupling {m}x{n} with marginals of length {} and {}",
                row_marginal.len(),
                col_marginal.len()
            )));
        }
        if values.iter().any(|&v| !(v >= T::zero()) || !v.is_finite()) {
            return Err(Error::InvalidConfig(
                "coupling has negative or non-finite entries".into(),
            ));
        }
        let total: f64 = values.iter().map(|v| v.as_f64()).sum();
        if (total - 1.0).abs() > mass_tolerance::<T>() {
            return Err(Error::InvalidConfig(format!("coupling mass {total} != 1")));
        }
        Ok(Self {
            values,
            row_marginal,
            col_marginal,
        })
    }

    pub(crate) fn new_unchecked(values: Array2<T>, row_marginal: Vec<T>, col_marginal: Vec<T>) -> Self {
        Self {
            values,
            row_marginal,
            col_marginal,
        }
    }

    pub fn values(&self) -> ArrayView2<'_, T> {
        self.values.view()
    }

    pub fn row_marginal(&self) -> &[T] {
        &self.row_marginal
    }

    pub fn col_marginal(&self) -> &[T] {
        &self.col_marginal
    }

    pub fn shape(&self) -> (usize, usize) {
        self.values.dim()
    }

    pub fn row_sums(&self) -> Vec<T> {
        self.values
            .rows()
            .into_iter()
            .map(|r| r.iter().copied().sum())
            .collect()
    }

    pub fn col_sums(&self) -> Vec<T> {
        let mut sums = vec![T::zero(); self.values.ncols()];
        for row in self.values.rows() {
            for (s, &v) in sums.iter_mut().zip(row.iter()) {
                *s = *s + v;
            }
        }
        sums
    }

    /// L-infinity violation of both marginals.
    pub fn marginal_error(&self) -> T {
        let rows = self
            .row_sums()
            .into_iter()
            .zip(&self.row_marginal)
            .map(|(s, &mu)| (s - mu).abs());
        let cols = self
            .col_sums()
            .into_iter()
            .zip(&self.col_marginal)
            .map(|(s, &nu)| (s - nu).abs());
        rows.chain(cols).fold(T::zero(), T::max)
    }

    /// Shannon entropy `-sum p log p` with `0 log 0 = 0`.
    pub fn entropy(&self) -> T {
        -self
            .values
            .iter()
            .filter(|&&p| p > T::zero())
            .map(|&p| p * p.ln())
            .sum::<T>()
    }

    pub fn into_values(self) -> Array2<T> {
        self.values
    }
}

/// Unit-mass tolerance appropriate for the scalar's precision.
pub(crate) fn mass_tolerance<T: Real>() -> f64 {
    (T::epsilon().as_f64() * 1e3).max(1e-9)
}

//! Entropic optimal transport,
//!
//! ```text
//! min_{pi in U(mu, nu)}  <C, pi> - lambda * H(pi),    H(pi) = -sum pi log pi
//! ```
//!
//! solved by alternating marginal projections. The default path works on
//! the dual potentials `f`, `g` with log-sum-exp reductions:
//!
//! ```text
//! f_i = lambda * (log mu_i - LSE_j((g_j - C_ij) / lambda))
//! g_j = lambda * (log nu_j - LSE_i((f_i - C_ij) / lambda))
//! pi_ij = exp((f_i + g_j - C_ij) / lambda)
//! ```
//!
//! The plain scaling path (`u = mu / K v`, `v = nu / K^T u`) produces the same
//! iterates when the Gibbs kernel does not underflow and is kept for
//! cross-checking.

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use super::{CostMatrix, Coupling};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Terms more than this many nats below the running maximum are skipped in
/// log-sum-exp. `exp(-60)` is below double precision relative to the leading
/// term, so the skip never changes a reduction.
const LSE_SKIP_NATS: f64 = 60.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SinkhornConfig {
    /// Entropic weight.
    pub lambda: f64,
    pub max_iterations: usize,
    /// L-infinity bound on the marginal violation.
    pub marginal_tolerance: f64,
    pub log_domain: bool,
}

impl Default for SinkhornConfig {
    fn default() -> Self {
        Self {
            lambda: 0.1,
            max_iterations: 1000,
            marginal_tolerance: 1e-9,
            log_domain: true,
        }
    }
}

impl SinkhornConfig {
    pub fn with_lambda(lambda: f64) -> Self {
        Self {
            lambda,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0) || !self.lambda.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "lambda must be positive, got {}",
                self.lambda
            )));
        }
        if !(self.marginal_tolerance > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "marginal tolerance must be positive, got {}",
                self.marginal_tolerance
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidConfig("max_iterations must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SinkhornResult<T: Real = f64> {
    pub coupling: Coupling<T>,
    /// Completed (row, column) update pairs.
    pub iterations: usize,
    pub final_marginal_error: T,
    pub converged: bool,
    /// Unregularized `<C, pi>`.
    pub transport_cost: T,
}

pub fn uniform_marginal<T: Real>(n: usize) -> Vec<T> {
    vec![T::one() / T::lit(n as f64); n]
}

fn check_marginal<T: Real>(p: &[T], what: &str) -> Result<()> {
    if p.is_empty() {
        return Err(Error::EmptyInput(format!("{what} marginal is empty")));
    }
    if p.iter().any(|&v| !(v > T::zero()) || !v.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "{what} marginal must be strictly positive"
        )));
    }
    let total: f64 = p.iter().map(|v| v.as_f64()).sum();
    let tol = 1e-12f64.max(T::epsilon().as_f64() * 4.0 * p.len() as f64);
    if (total - 1.0).abs() > tol {
        return Err(Error::InvalidConfig(format!("{what} marginal sums to {total}, not 1")));
    }
    Ok(())
}

/// Solves the entropic OT problem for `cost` between `mu` (rows) and `nu`
/// (columns). Running out of iterations is not an error; the result reports
/// `converged = false`.
pub fn sinkhorn<T: Real>(
    cost: &CostMatrix<T>,
    mu: &[T],
    nu: &[T],
    config: &SinkhornConfig,
) -> Result<SinkhornResult<T>> {
    config.validate()?;
    let (m, n) = cost.shape();
    if mu.len() != m || nu.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "cost is {m}x{n} but marginals have length {} and {}",
            mu.len(),
            nu.len()
        )));
    }
    check_marginal(mu, "row")?;
    check_marginal(nu, "column")?;

    let tol = T::lit(config.marginal_tolerance);
    let (plan, iterations) = if config.log_domain {
        let log_mu: Vec<T> = mu.iter().map(|p| p.ln()).collect();
        let log_nu: Vec<T> = nu.iter().map(|p| p.ln()).collect();
        let lambda = T::lit(config.lambda);
        let run = log_sinkhorn(
            cost.values(),
            &log_mu,
            &log_nu,
            lambda,
            config.max_iterations,
            Some(tol),
            false,
        );
        (run.plan(cost.values(), lambda), run.iterations)
    } else {
        scaling_sinkhorn(cost.values(), mu, nu, config)?
    };

    let coupling = Coupling::new_unchecked(plan, mu.to_vec(), nu.to_vec());
    let final_marginal_error = coupling.marginal_error();
    let transport_cost = transport_cost(&coupling, cost)?;
    Ok(SinkhornResult {
        converged: final_marginal_error <= tol,
        coupling,
        iterations,
        final_marginal_error,
        transport_cost,
    })
}

/// `<C, pi>`, summed in row-major order.
pub fn transport_cost<T: Real>(coupling: &Coupling<T>, cost: &CostMatrix<T>) -> Result<T> {
    if coupling.shape() != cost.shape() {
        return Err(Error::DimensionMismatch(format!(
            "coupling {:?} vs cost {:?}",
            coupling.shape(),
            cost.shape()
        )));
    }
    Ok(coupling
        .values()
        .iter()
        .zip(cost.values().iter())
        .fold(T::zero(), |acc, (&p, &c)| acc + p * c))
}

/// Dual potentials after a log-domain run, plus the per-iteration history
/// when requested (used by the unrolled gradient).
pub(crate) struct LogSinkhorn<T> {
    pub f: Vec<T>,
    pub g: Vec<T>,
    pub iterations: usize,
    /// `(f^k, g^k)` for `k = 1..=iterations`.
    pub history: Vec<(Vec<T>, Vec<T>)>,
}

impl<T: Real> LogSinkhorn<T> {
    pub fn plan(&self, cost: ArrayView2<'_, T>, lambda: T) -> Array2<T> {
        let inv = T::one() / lambda;
        let mut plan = cost.to_owned();
        for (mut row, &fi) in plan.rows_mut().into_iter().zip(&self.f) {
            for (c, &gj) in row.iter_mut().zip(&self.g) {
                *c = ((fi + gj - *c) * inv).exp();
            }
        }
        plan
    }
}

/// `out[r] = LSE_k((pot[k] - rows[r][k]) / lambda)`, one sequential pass per row.
pub(crate) fn lse_rows<T: Real>(rows: ArrayView2<'_, T>, pot: &[T], lambda: T, out: &mut [T]) {
    let inv = T::one() / lambda;
    let skip = T::lit(LSE_SKIP_NATS) * lambda;
    for (row, o) in rows.rows().into_iter().zip(out.iter_mut()) {
        let row = row.to_slice().expect("standard layout");
        let mut top = T::neg_infinity();
        for (&p, &c) in pot.iter().zip(row) {
            top = top.max(p - c);
        }
        let floor = top - skip;
        let mut acc = T::zero();
        for (&p, &c) in pot.iter().zip(row) {
            let a = p - c;
            if a >= floor {
                acc = acc + ((a - top) * inv).exp();
            }
        }
        *o = top * inv + acc.ln();
    }
}

/// Log-domain Sinkhorn on `cost`. With `tol = None` exactly `max_iterations`
/// update pairs are performed.
pub(crate) fn log_sinkhorn<T: Real>(
    cost: ArrayView2<'_, T>,
    log_mu: &[T],
    log_nu: &[T],
    lambda: T,
    max_iterations: usize,
    tol: Option<T>,
    record: bool,
) -> LogSinkhorn<T> {
    let (m, n) = cost.dim();
    let cost = cost.as_standard_layout();
    let cost_t = cost.t().as_standard_layout().into_owned();

    let mut g = vec![T::zero(); n];
    let mut row_lse = vec![T::zero(); m];
    let mut next_lse = vec![T::zero(); m];
    let mut col_lse = vec![T::zero(); n];
    lse_rows(cost.view(), &g, lambda, &mut row_lse);
    let mut f: Vec<T> = log_mu.iter().zip(&row_lse).map(|(&a, &l)| lambda * (a - l)).collect();
    let mut history = Vec::new();
    let mut iterations = 0;

    for it in 1..=max_iterations {
        lse_rows(cost_t.view(), &f, lambda, &mut col_lse);
        for ((gj, &a), &l) in g.iter_mut().zip(log_nu).zip(&col_lse) {
            *gj = lambda * (a - l);
        }
        if record {
            history.push((f.clone(), g.clone()));
        }
        iterations = it;
        if it == max_iterations {
            break;
        }
        lse_rows(cost.view(), &g, lambda, &mut next_lse);
        if let Some(tol) = tol {
            // Row sums of the current plan are exp(log mu - L_old + L_new).
            let err = log_mu
                .iter()
                .zip(&row_lse)
                .zip(&next_lse)
                .map(|((&a, &lo), &ln)| ((a - lo + ln).exp() - a.exp()).abs())
                .fold(T::zero(), T::max);
            if err <= tol {
                break;
            }
        }
        std::mem::swap(&mut row_lse, &mut next_lse);
        for ((fi, &a), &l) in f.iter_mut().zip(log_mu).zip(&row_lse) {
            *fi = lambda * (a - l);
        }
    }
    LogSinkhorn {
        f,
        g,
        iterations,
        history,
    }
}

fn scaling_sinkhorn<T: Real>(
    cost: ArrayView2<'_, T>,
    mu: &[T],
    nu: &[T],
    config: &SinkhornConfig,
) -> Result<(Array2<T>, usize)> {
    let lambda = T::lit(config.lambda);
    let tol = T::lit(config.marginal_tolerance);
    let overflow = || Error::NumericalOverflow { lambda: config.lambda };
    let kernel = cost.mapv(|c| (-c / lambda).exp());
    let kernel_t = kernel.t().as_standard_layout().into_owned();
    let matvec = |k: &Array2<T>, x: &[T], out: &mut [T]| -> Result<()> {
        for (row, o) in k.rows().into_iter().zip(out.iter_mut()) {
            let s = row.iter().zip(x).fold(T::zero(), |acc, (&a, &b)| acc + a * b);
            if !(s > T::zero()) || !s.is_finite() {
                return Err(overflow());
            }
            *o = s;
        }
        Ok(())
    };
    let (m, n) = cost.dim();
    let mut u = vec![T::zero(); m];
    let mut v = vec![T::one(); n];
    let mut kv = vec![T::zero(); m];
    let mut ktu = vec![T::zero(); n];
    matvec(&kernel, &v, &mut kv)?;
    for ((ui, &a), &s) in u.iter_mut().zip(mu).zip(&kv) {
        *ui = a / s;
    }
    let mut iterations = 0;
    for it in 1..=config.max_iterations {
        matvec(&kernel_t, &u, &mut ktu)?;
        for ((vj, &b), &s) in v.iter_mut().zip(nu).zip(&ktu) {
            *vj = b / s;
        }
        iterations = it;
        if it == config.max_iterations {
            break;
        }
        matvec(&kernel, &v, &mut kv)?;
        let err = u
            .iter()
            .zip(&kv)
            .zip(mu)
            .map(|((&ui, &s), &a)| (ui * s - a).abs())
            .fold(T::zero(), T::max);
        if err <= tol {
            break;
        }
        for ((ui, &a), &s) in u.iter_mut().zip(mu).zip(&kv) {
            *ui = a / s;
        }
    }
    if u.iter().chain(&v).any(|x| !x.is_finite()) {
        return Err(overflow());
    }
    let mut plan = kernel;
    for (mut row, &ui) in plan.rows_mut().into_iter().zip(&u) {
        for (k, &vj) in row.iter_mut().zip(&v) {
            *k = ui * *k * vj;
        }
    }
    Ok((plan, iterations))
}

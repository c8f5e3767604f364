//! Orthogonal matching pursuit.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative singular-value floor below which a support is treated as
/// rank deficient.
const RANK_RTOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    ZeroMeasurement,
    Budget,
    ResidualTolerance,
    /// No remaining column correlates with the residual.
    Exhausted,
    /// The newest atom made the support rank deficient and was dropped.
    DependentSupport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseSolution {
    pub support: Vec<usize>,
    pub coefficients: Vec<f64>,
    /// Residual ℓ2 norm after each accepted iteration.
    pub residual_norms: Vec<f64>,
    pub iterations: usize,
    pub stop: StopReason,
}

impl SparseSolution {
    fn empty(stop: StopReason) -> Self {
        Self {
            support: Vec::new(),
            coefficients: Vec::new(),
            residual_norms: Vec::new(),
            iterations: 0,
            stop,
        }
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Least squares on the selected columns via SVD. `None` when rank deficient.
fn solve_support(a: &DMatrix<f64>, support: &[usize], y: &DVector<f64>) -> Option<DVector<f64>> {
    let sub = a.select_columns(support);
    let svd = sub.svd(true, true);
    let smax = svd.singular_values.max();
    if smax <= 0.0 {
        return None;
    }
    let eps = smax * RANK_RTOL;
    if svd.rank(eps) < support.len() {
        return None;
    }
    svd.solve(y, eps).ok()
}

/// Greedy OMP.
///
/// Each iteration selects the column with the largest normalized absolute
/// correlation with the residual (ties go to the lowest index), refits all
/// selected coefficients by least squares and updates the residual. Stops
/// at `sparsity_budget` atoms or once `‖r‖ ≤ residual_tol·‖y‖`.
pub fn omp(a: &DMatrix<f64>, y: &[f64], sparsity_budget: usize, residual_tol: f64) -> Result<SparseSolution> {
    let (m, n) = a.shape();
    if y.len() != m {
        return Err(Error::invalid(format!(
            "measurement length {} does not match {} matrix rows",
            y.len(),
            m
        )));
    }
    if sparsity_budget > m {
        return Err(Error::invalid(format!(
            "sparsity budget {sparsity_budget} exceeds measurement count {m}"
        )));
    }
    if !(residual_tol.is_finite() && residual_tol >= 0.0) {
        return Err(Error::invalid(format!(
            "residual tolerance must be >= 0, got {residual_tol}"
        )));
    }
    let y_norm = norm(y);
    if y_norm == 0.0 {
        return Ok(SparseSolution::empty(StopReason::ZeroMeasurement));
    }

    let col_norms: Vec<f64> = (0..n).map(|j| a.column(j).norm()).collect();
    let zero_cols = col_norms.iter().filter(|&&c| c == 0.0).count();
    if zero_cols > 0 {
        log::warn!("omp: skipping {zero_cols} zero column(s)");
    }

    let yv = DVector::from_column_slice(y);
    let mut residual = yv.clone();
    let mut support: Vec<usize> = Vec::new();
    let mut coefficients: Vec<f64> = Vec::new();
    let mut residual_norms = Vec::new();
    let mut selected = vec![false; n];

    let stop = loop {
        if support.len() >= sparsity_budget {
            break StopReason::Budget;
        }
        let corr = a.tr_mul(&residual);
        let mut best: Option<(usize, f64)> = None;
        for j in 0..n {
            if selected[j] || col_norms[j] == 0.0 {
                continue;
            }
            let c = corr[j].abs() / col_norms[j];
            if best.is_none_or(|(_, b)| c > b) {
                best = Some((j, c));
            }
        }
        let Some((j, c)) = best else {
            break StopReason::Exhausted;
        };
        if c == 0.0 {
            break StopReason::Exhausted;
        }
        support.push(j);
        let Some(coef) = solve_support(a, &support, &yv) else {
            support.pop();
            break StopReason::DependentSupport;
        };
        selected[j] = true;
        residual = &yv - a.select_columns(&support) * &coef;
        coefficients = coef.iter().copied().collect();
        let r = residual.norm();
        residual_norms.push(r);
        if r <= residual_tol * y_norm {
            break StopReason::ResidualTolerance;
        }
    };

    Ok(SparseSolution {
        iterations: support.len(),
        support,
        coefficients,
        residual_norms,
        stop,
    })
}

/// Largest normalized inner product between distinct columns.
pub fn mutual_coherence(a: &DMatrix<f64>) -> f64 {
    let n = a.ncols();
    let norms: Vec<f64> = (0..n).map(|j| a.column(j).norm()).collect();
    let mut mu: f64 = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            if norms[i] > 0.0 && norms[j] > 0.0 {
                mu = mu.max(a.column(i).dot(&a.column(j)).abs() / (norms[i] * norms[j]));
            }
        }
    }
    mu
}

//! Nonnegative minimization of the discrete energy and the signed companion
//! solve.
//!
//! The nonnegative problem is the linear complementarity problem
//! `r = Mu - b ≥ 0, u ≥ 0, uᵀr = 0` with `M = A + diag S`. It is solved by
//! block principal pivoting: every infeasible index changes side at once
//! while the number of infeasibilities keeps dropping, and the single-index
//! rule (largest infeasible index) takes over when it stalls, which
//! guarantees termination.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{NdrError, Result};
use crate::geometry::Quadrature;
use crate::kernel::{rhs_values, QuadraticForm, RhsKind};

/// Density `u` of `μ = u λ` at the quadrature nodes.
#[derive(Debug, Clone)]
pub struct DiscreteMeasure {
    pub quadrature: Arc<Quadrature>,
    pub u: Vec<f64>,
    pub signed: bool,
    pub support_mask: Vec<bool>,
    /// Absolute threshold used for `support_mask`.
    pub threshold: f64,
}

impl DiscreteMeasure {
    /// Build a measure, marking support where `|u_i|` exceeds
    /// `relative_threshold · max|u|`.
    pub fn new(quadrature: Arc<Quadrature>, u: Vec<f64>, signed: bool, relative_threshold: f64) -> Self {
        let scale = u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let threshold = relative_threshold * scale;
        let support_mask = u
            .iter()
            .map(|&v| if signed { v.abs() > threshold } else { v > threshold })
            .collect();
        Self {
            quadrature,
            u,
            signed,
            support_mask,
            threshold,
        }
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    /// Total mass `Σ u_i w_i`.
    pub fn mass(&self) -> f64 {
        self.u.iter().zip(&self.quadrature.weights).map(|(u, w)| u * w).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    Converged,
    MaxIter,
    NotPSD,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub iterations: usize,
    pub kkt_residual: f64,
    pub energy: f64,
    pub active_set_changes: usize,
    pub status: SolveStatus,
}

/// Initial free set of the pivoting iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Start {
    /// Positive part of the unconstrained minimizer.
    #[default]
    Unconstrained,
    AllBound,
    AllFree,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolveOptions {
    pub tol: f64,
    /// Defaults to `10 n`.
    pub max_iter: Option<usize>,
    /// Relative to `max u`.
    pub support_threshold: f64,
    pub start: Start,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: None,
            support_threshold: 1e-8,
            start: Start::Unconstrained,
        }
    }
}

impl SolveOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            tol,
            ..Self::default()
        }
    }
}

fn system_matrix(form: &QuadraticForm, idx: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(idx.len(), idx.len(), |r, c| {
        let v = form.a[(idx[r], idx[c])];
        if r == c {
            v + form.s[idx[r]]
        } else {
            v
        }
    })
}

/// Solve `M_FF x = b_F` by Cholesky with one refinement step.
fn solve_free(form: &QuadraticForm, idx: &[usize]) -> Option<Vec<f64>> {
    if idx.is_empty() {
        return Some(vec![]);
    }
    let m = system_matrix(form, idx);
    let rhs = DVector::from_iterator(idx.len(), idx.iter().map(|&i| form.b[i]));
    let chol = m.clone().cholesky()?;
    let mut x = chol.solve(&rhs);
    let correction = chol.solve(&(&rhs - &m * &x));
    x += correction;
    x.iter().all(|v| v.is_finite()).then(|| x.iter().copied().collect())
}

fn scatter(n: usize, idx: &[usize], x: &[f64]) -> Vec<f64> {
    let mut u = vec![0.0; n];
    for (&i, &v) in idx.iter().zip(x) {
        u[i] = v;
    }
    u
}

/// `((A + diag S)u - b) / w`: `Gμ + σu - φ` at the nodes.
pub fn variational_residual(form: &QuadraticForm, m: &DiscreteMeasure) -> Result<Vec<f64>> {
    if m.len() != form.len() {
        return Err(NdrError::DimensionMismatch {
            expected: form.len(),
            got: m.len(),
        });
    }
    Ok(residual(form, &m.u))
}

fn residual(form: &QuadraticForm, u: &[f64]) -> Vec<f64> {
    form.apply(u)
        .iter()
        .zip(&form.b)
        .zip(form.weights())
        .map(|((a, b), w)| (a - b) / w)
        .collect()
}

/// Complementarity measure: dual infeasibility and `min(u_i, |r_i|)`.
pub fn kkt_residual(u: &[f64], r: &[f64]) -> f64 {
    u.iter().zip(r).fold(0.0f64, |m, (&ui, &ri)| {
        m.max((-ri).max(0.0)).max((-ui).max(0.0)).max(ui.min(ri.abs()))
    })
}

/// Minimize `J(u)` over `u ≥ 0`.
pub fn solve_nonnegative(form: &QuadraticForm, opts: &SolveOptions) -> (DiscreteMeasure, SolveReport) {
    let n = form.len();
    let max_iter = opts.max_iter.unwrap_or(10 * n.max(1));
    let not_psd = |iterations, changes| {
        (
            DiscreteMeasure::new(Arc::clone(&form.quadrature), vec![0.0; n], false, opts.support_threshold),
            SolveReport {
                iterations,
                kkt_residual: f64::INFINITY,
                energy: 0.0,
                active_set_changes: changes,
                status: SolveStatus::NotPSD,
            },
        )
    };

    let mut free: Vec<bool> = match opts.start {
        Start::AllBound => vec![false; n],
        Start::AllFree => vec![true; n],
        Start::Unconstrained => {
            let all: Vec<usize> = (0..n).collect();
            match solve_free(form, &all) {
                Some(x) => x.iter().map(|&v| v > 0.0).collect(),
                None => return not_psd(0, 0),
            }
        }
    };

    let mut best_infeasible = n + 1;
    let mut buffer = 3usize;
    let mut changes = 0usize;
    let mut iterations = 0usize;
    let mut u = vec![0.0; n];
    let mut r = vec![0.0; n];
    let mut status = SolveStatus::MaxIter;

    while iterations < max_iter {
        iterations += 1;
        let idx: Vec<usize> = (0..n).filter(|&i| free[i]).collect();
        let Some(x) = solve_free(form, &idx) else {
            return not_psd(iterations, changes);
        };
        u = scatter(n, &idx, &x);
        r = residual(form, &u);
        let scale = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let primal_eps = 1e-13 * scale;
        let infeasible: Vec<usize> = (0..n)
            .filter(|&i| if free[i] { u[i] < -primal_eps } else { r[i] < -opts.tol })
            .collect();
        if infeasible.is_empty() {
            status = SolveStatus::Converged;
            break;
        }
        if infeasible.len() < best_infeasible {
            best_infeasible = infeasible.len();
            buffer = 3;
            for &i in &infeasible {
                free[i] = !free[i];
            }
            changes += infeasible.len();
        } else if buffer > 0 {
            buffer -= 1;
            for &i in &infeasible {
                free[i] = !free[i];
            }
            changes += infeasible.len();
        } else {
            let i = *infeasible.last().unwrap();
            free[i] = !free[i];
            changes += 1;
        }
    }

    // round-off negatives on the free set
    if u.iter().any(|&v| v < 0.0) {
        for v in u.iter_mut() {
            *v = v.max(0.0);
        }
        r = residual(form, &u);
    }
    let kkt = kkt_residual(&u, &r);
    if status == SolveStatus::Converged && kkt > opts.tol {
        status = SolveStatus::MaxIter;
    }
    let report = SolveReport {
        iterations,
        kkt_residual: kkt,
        energy: form.energy(&u),
        active_set_changes: changes,
        status,
    };
    (
        DiscreteMeasure::new(Arc::clone(&form.quadrature), u, false, opts.support_threshold),
        report,
    )
}

/// Solve `(A + diag S)u = b` on `restrict_to` (all nodes when `None`), with
/// zeros elsewhere.
pub fn solve_signed(
    form: &QuadraticForm,
    restrict_to: Option<&[bool]>,
    opts: &SolveOptions,
) -> Result<(DiscreteMeasure, SolveReport)> {
    let n = form.len();
    let idx: Vec<usize> = match restrict_to {
        Some(mask) => {
            if mask.len() != n {
                return Err(NdrError::DimensionMismatch {
                    expected: n,
                    got: mask.len(),
                });
            }
            (0..n).filter(|&i| mask[i]).collect()
        }
        None => (0..n).collect(),
    };
    if idx.is_empty() {
        return Err(NdrError::DegenerateSupport);
    }
    let x = solve_free(form, &idx).ok_or(NdrError::DegenerateSupport)?;
    let u = scatter(n, &idx, &x);
    let r = residual(form, &u);
    let kkt = idx.iter().fold(0.0f64, |m, &i| m.max(r[i].abs()));
    let report = SolveReport {
        iterations: 1,
        kkt_residual: kkt,
        energy: form.energy(&u),
        active_set_changes: 0,
        status: SolveStatus::Converged,
    };
    Ok((
        DiscreteMeasure::new(Arc::clone(&form.quadrature), u, true, opts.support_threshold),
        report,
    ))
}

/// Outcome of the two-path comparison in [`splitting_crosscheck`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplittingReport {
    pub max_difference: f64,
    pub shift: f64,
    pub compared_nodes: usize,
}

/// Compare the signed solve for `phi` with the difference of the
/// nonnegative solves for `phi + M` and the constant `M`.
pub fn splitting_crosscheck(
    form: &QuadraticForm,
    phi: RhsKind,
    shift: Option<f64>,
    opts: &SolveOptions,
) -> Result<SplittingReport> {
    let values = rhs_values(&phi, &form.quadrature)?;
    let max_abs = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let shift = shift.unwrap_or(if max_abs > 0.0 { 2.0 * max_abs } else { 1.0 });
    if let Some(node) = values.iter().position(|v| !(v + shift > 0.0)) {
        return Err(NdrError::Precondition {
            node,
            reason: format!("phi + M = {} is not positive", values[node] + shift),
        });
    }
    let sigma_zero = form.sigma.iter().all(|&s| s == 0.0);
    if !sigma_zero {
        if let Some(node) = form.sigma.iter().position(|&s| !(s > 0.0)) {
            return Err(NdrError::Precondition {
                node,
                reason: "sigma must vanish identically or be positive everywhere".into(),
            });
        }
    }
    let shifted = form.with_rhs(RhsKind::Tabulated {
        values: values.iter().map(|v| v + shift).collect(),
    })?;
    let constant = form.with_rhs(RhsKind::Constant { value: shift })?;
    let (m2, r2) = solve_nonnegative(&shifted, opts);
    let (m1, r1) = solve_nonnegative(&constant, opts);
    if r2.status == SolveStatus::NotPSD || r1.status == SolveStatus::NotPSD {
        return Err(NdrError::NotPositiveDefinite);
    }
    let common: Vec<bool> = m1
        .support_mask
        .iter()
        .zip(&m2.support_mask)
        .map(|(a, b)| *a && *b)
        .collect();
    let signed_form = form.with_rhs(phi)?;
    let restrict = if sigma_zero { Some(common.as_slice()) } else { None };
    let (signed, _) = solve_signed(&signed_form, restrict, opts)?;
    let mut max_difference = 0.0f64;
    let mut compared = 0;
    for i in 0..form.len() {
        if common[i] {
            compared += 1;
            max_difference = max_difference.max((m2.u[i] - m1.u[i] - signed.u[i]).abs());
        }
    }
    Ok(SplittingReport {
        max_difference,
        shift,
        compared_nodes: compared,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_form(a: f64, b: f64) -> QuadraticForm {
        QuadraticForm::from_parts(DMatrix::from_element(1, 1, a), vec![0.0], vec![b]).unwrap()
    }

    #[test]
    fn scalar_interior_minimum() {
        let (m, rep) = solve_nonnegative(&tiny_form(2.0, 1.0), &SolveOptions::default());
        assert!((m.u[0] - 0.5).abs() < 1e-15);
        // J = uᵀMu - 2bᵀu = 0.5 - 1
        assert!((rep.energy + 0.5).abs() < 1e-15);
        assert_eq!(rep.status, SolveStatus::Converged);
    }

    #[test]
    fn scalar_boundary_minimum() {
        let f = tiny_form(2.0, -1.0);
        let (m, rep) = solve_nonnegative(&f, &SolveOptions::default());
        assert_eq!(m.u[0], 0.0);
        assert_eq!(rep.status, SolveStatus::Converged);
        let r = variational_residual(&f, &m).unwrap();
        assert!((r[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn indefinite_reports_not_psd() {
        let (_, rep) = solve_nonnegative(&tiny_form(-1.0, 1.0), &SolveOptions::default());
        assert_eq!(rep.status, SolveStatus::NotPSD);
        assert!(matches!(
            solve_signed(&tiny_form(-1.0, 1.0), None, &SolveOptions::default()),
            Err(NdrError::DegenerateSupport)
        ));
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let (m, _) = solve_signed(&tiny_form(2.0, 0.0), None, &SolveOptions::default()).unwrap();
        assert_eq!(m.u[0], 0.0);
        assert!(m.signed);
    }

    #[test]
    fn empty_restriction_is_degenerate() {
        assert_eq!(
            solve_signed(&tiny_form(2.0, 1.0), Some(&[false]), &SolveOptions::default()).unwrap_err(),
            NdrError::DegenerateSupport
        );
    }
}

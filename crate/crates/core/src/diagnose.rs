//! Machine-checkable verification of solves: variational conditions, energy
//! identity, support geometry, positive definiteness, the equation of state,
//! convergence against closed forms and the reconstruction test with a
//! prescribed singular density.

use std::sync::Arc;

use nalgebra::SymmetricEigen;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::analytic::{
    box_condensate, bound_state_density, semicircle_condensate, solve_band_polynomial, BandPolynomial, BandSystem,
};
use crate::error::{NdrError, Result};
use crate::exec::Exec;
use crate::geometry::{
    discretize_contour, outer_boundary_nodes, CellShape, ComplexPoint, Primitive, Quadrature, SupportSpec,
};
use crate::kernel::{assemble_form, kernel_value, rhs_value, KernelKind, QuadraticForm, RhsKind, SigmaSpec};
use crate::quad::tanh_sinh_split;
use crate::solver::{solve_nonnegative, variational_residual, DiscreteMeasure, SolveOptions, SolveStatus};

/// Tolerances and zone sizes used by [`verify`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// Solver tolerance; residual bounds are `residual_factor · solver_tol`.
    pub solver_tol: f64,
    pub residual_factor: f64,
    /// Exclusion radius around singular points, in cell sizes.
    pub exclusion_cells: f64,
    /// Real-axis band as a fraction of the support diameter.
    pub real_axis_fraction: f64,
    /// Relative PSD bound: `λ_min ≥ -psd_relative · max|A|`.
    pub psd_relative: f64,
    pub eigen_limit: usize,
    pub coverage_min: f64,
    pub vacancy_min: f64,
    pub eq_of_state_max: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            solver_tol: 1e-10,
            residual_factor: 10.0,
            exclusion_cells: 3.0,
            real_axis_fraction: 1e-3,
            psd_relative: 1e-10,
            eigen_limit: 1000,
            coverage_min: 1.0,
            vacancy_min: 0.99,
            eq_of_state_max: 5e-2,
        }
    }
}

/// Residual bounds from [`verify_variational`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VariationalSummary {
    pub max_support_residual: f64,
    pub min_offsupport_residual: f64,
    /// The same bounds restricted to the exclusion zones.
    pub excluded_max_support_residual: f64,
    pub excluded_min_offsupport_residual: f64,
    pub support_nodes: usize,
    pub excluded_nodes: usize,
}

/// Max `|r_i|` over support nodes and min `r_i` over off-support nodes,
/// inside and outside the exclusion zones.
pub fn verify_variational(form: &QuadraticForm, m: &DiscreteMeasure, tol: &Tolerances) -> Result<VariationalSummary> {
    let r = variational_residual(form, m)?;
    let excluded = form
        .quadrature
        .exclusion_mask(tol.exclusion_cells, tol.real_axis_fraction);
    let mut s = VariationalSummary {
        max_support_residual: 0.0,
        min_offsupport_residual: 0.0,
        excluded_max_support_residual: 0.0,
        excluded_min_offsupport_residual: 0.0,
        support_nodes: 0,
        excluded_nodes: excluded.iter().filter(|&&e| e).count(),
    };
    let mut min_off = f64::INFINITY;
    let mut min_off_excl = f64::INFINITY;
    for i in 0..r.len() {
        if m.support_mask[i] {
            s.support_nodes += 1;
            let slot = if excluded[i] {
                &mut s.excluded_max_support_residual
            } else {
                &mut s.max_support_residual
            };
            *slot = slot.max(r[i].abs());
        } else if excluded[i] {
            min_off_excl = min_off_excl.min(r[i]);
        } else {
            min_off = min_off.min(r[i]);
        }
    }
    s.min_offsupport_residual = if min_off.is_finite() { min_off } else { 0.0 };
    s.excluded_min_offsupport_residual = if min_off_excl.is_finite() { min_off_excl } else { 0.0 };
    Ok(s)
}

/// `|J(u) + Σ φ_i u_i w_i|`.
pub fn energy_identity_gap(form: &QuadraticForm, u: &[f64]) -> f64 {
    let bu: f64 = form.b.iter().zip(u).map(|(b, u)| b * u).sum();
    (form.energy(u) + bu).abs()
}

/// Hypotheses supplied by the caller for the support-geometry checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SupportHypotheses {
    /// `φ` positive and superharmonic with positive lower limit at infinity.
    pub phi_positive_superharmonic: bool,
    /// `σ` vanishes on the boundary enclosing the 2D interior.
    pub sigma_zero_on_boundary: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportGeometry {
    pub coverage: f64,
    pub vacancy: f64,
    pub outer_nodes: usize,
    pub interior_nodes: usize,
    pub coverage_checked: bool,
    pub vacancy_checked: bool,
    pub notes: Vec<String>,
}

/// Fraction of outer-boundary nodes inside the support and fraction of
/// interior area nodes outside it.
pub fn check_support_geometry(m: &DiscreteMeasure, spec: &SupportSpec, hyp: SupportHypotheses) -> SupportGeometry {
    let q = &m.quadrature;
    let outer = outer_boundary_nodes(q, spec);
    let mut g = SupportGeometry {
        coverage: 1.0,
        vacancy: 1.0,
        outer_nodes: outer.iter().filter(|&&o| o).count(),
        interior_nodes: 0,
        coverage_checked: false,
        vacancy_checked: false,
        notes: vec![],
    };
    if hyp.phi_positive_superharmonic {
        if g.outer_nodes > 0 {
            let covered = (0..q.len()).filter(|&i| outer[i] && m.support_mask[i]).count();
            g.coverage = covered as f64 / g.outer_nodes as f64;
            g.coverage_checked = true;
        }
    } else {
        g.notes
            .push("coverage skipped: right-hand side is not declared positive superharmonic".into());
    }
    let interior: Vec<usize> = (0..q.len())
        .filter(|&i| q.cell_shape[i] == CellShape::Square && !outer[i])
        .collect();
    g.interior_nodes = interior.len();
    if interior.is_empty() {
        g.notes.push("vacancy skipped: no interior area nodes".into());
    } else if !hyp.sigma_zero_on_boundary {
        g.notes
            .push("vacancy skipped: sigma is not declared zero on the enclosing boundary".into());
    } else {
        let vacant = interior.iter().filter(|&&i| !m.support_mask[i]).count();
        g.vacancy = vacant as f64 / interior.len() as f64;
        g.vacancy_checked = true;
    }
    g
}

/// Residual of the equation of state at the evaluated nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct EqStateResidual {
    /// Absolute residual; zero where not evaluated.
    pub residuals: Vec<f64>,
    pub evaluated: Vec<bool>,
}

impl EqStateResidual {
    pub fn max(&self) -> f64 {
        self.max_over(&vec![true; self.residuals.len()])
    }

    /// Max residual over evaluated nodes that are also in `mask`.
    pub fn max_over(&self, mask: &[bool]) -> f64 {
        self.residuals
            .iter()
            .zip(&self.evaluated)
            .zip(mask)
            .filter(|((_, &e), &k)| e && k)
            .fold(0.0f64, |m, ((r, _), _)| m.max(*r))
    }
}

/// Residual of `s(z) = s₀(z) + (1/Im z) Σ_j K(z, z_j) (s(z) - s(z_j)) u_j w_j`
/// with `s = v/u` and `s₀ = -4 Re z`, at nodes with `u_i > threshold`.
///
/// The coincident term carries the factor `s(z_i) - s(z_i)` and vanishes.
pub fn equation_of_state_residual(
    q: &Quadrature,
    u: &[f64],
    v: &[f64],
    kernel: KernelKind,
    threshold: f64,
) -> Result<EqStateResidual> {
    let n = q.len();
    for len in [u.len(), v.len()] {
        if len != n {
            return Err(NdrError::DimensionMismatch { expected: n, got: len });
        }
    }
    let evaluated: Vec<bool> = u.iter().map(|&x| x > threshold).collect();
    if !evaluated.iter().any(|&e| e) {
        return Err(NdrError::EmptyEvaluation);
    }
    let rows = Exec::default().map(n, |i| -> Result<f64> {
        if !evaluated[i] {
            return Ok(0.0);
        }
        let z = q.nodes[i];
        let s = v[i] / u[i];
        let s0 = -4.0 * z.re;
        let mut sum = 0.0;
        for j in 0..n {
            if j == i {
                continue;
            }
            let term = s * u[j] - v[j];
            if term != 0.0 {
                sum += kernel_value(kernel, z, q.nodes[j])? * term * q.weights[j];
            }
        }
        Ok((s - s0 - sum / z.im).abs())
    });
    let residuals = rows.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(EqStateResidual { residuals, evaluated })
}

/// Smallest eigenvalue of `A` with the scale it is compared against.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PsdSummary {
    pub min_eigenvalue: f64,
    pub max_abs: f64,
    /// Set for kernels without a positivity guarantee.
    pub warning: bool,
}

impl PsdSummary {
    pub fn passes(&self, relative: f64) -> bool {
        self.min_eigenvalue >= -relative * self.max_abs
    }
}

/// Dense symmetric eigensolve of `A` (without `σ`).
pub fn psd_check(form: &QuadraticForm, limit: usize) -> Result<PsdSummary> {
    let n = form.len();
    if n > limit {
        return Err(NdrError::EigenLimit { n, limit });
    }
    let eig = SymmetricEigen::new((*form.a).clone());
    Ok(PsdSummary {
        min_eigenvalue: eig.eigenvalues.min(),
        max_abs: form.max_abs(),
        warning: matches!(form.kernel, KernelKind::NlsBreather { .. }),
    })
}

/// Regular probe lattice over the support's bounding box, enlarged by a
/// quarter of the diameter, keeping points at least `clearance` cell sizes
/// away from every node. `offset` shifts the lattice by a fraction of its
/// spacing in each direction.
pub fn probe_grid(q: &Quadrature, nx: usize, ny: usize, clearance: f64, offset: (f64, f64)) -> Vec<ComplexPoint> {
    let (mut lo, mut hi) = (
        Complex64::new(f64::INFINITY, f64::INFINITY),
        Complex64::new(f64::NEG_INFINITY, f64::NEG_INFINITY),
    );
    for z in &q.nodes {
        lo = Complex64::new(lo.re.min(z.re), lo.im.min(z.im));
        hi = Complex64::new(hi.re.max(z.re), hi.im.max(z.im));
    }
    let pad = 0.25 * q.diameter;
    let (x0, x1) = (lo.re - pad, hi.re + pad);
    let (y0, y1) = (0.0, hi.im + pad);
    let dx = (x1 - x0) / nx as f64;
    let dy = (y1 - y0) / ny as f64;
    let mut out = Vec::new();
    for j in 0..ny {
        for i in 0..nx {
            let z = Complex64::new(x0 + (i as f64 + offset.0) * dx, y0 + (j as f64 + offset.1) * dy);
            if z.im <= 0.0 {
                continue;
            }
            let clear = q
                .nodes
                .iter()
                .zip(&q.cell_size)
                .all(|(w, h)| (z - w).norm() >= clearance * h);
            if clear {
                out.push(z);
            }
        }
    }
    out
}

/// Largest `Gμ(z) - φ(z)` over the probes.
pub fn max_potential_excess(m: &DiscreteMeasure, kernel: KernelKind, rhs: &RhsKind, probes: &[ComplexPoint]) -> Result<f64> {
    let q = &m.quadrature;
    let values = Exec::default().map(probes.len(), |k| -> Result<f64> {
        let z = probes[k];
        let mut g = 0.0;
        for i in 0..q.len() {
            if m.u[i] != 0.0 {
                g += kernel_value(kernel, z, q.nodes[i])? * m.u[i] * q.weights[i];
            }
        }
        Ok(g - rhs_value(rhs, z)?)
    });
    values
        .into_iter()
        .try_fold(f64::NEG_INFINITY, |acc, v| Ok(acc.max(v?)))
}

/// Largest `|u_{i+1} - u_i| / h` between neighbouring nodes of the same curve.
pub fn max_increment_ratio(m: &DiscreteMeasure) -> f64 {
    let q = &m.quadrature;
    (1..q.len())
        .filter(|&i| q.panel_of[i] == q.panel_of[i - 1] && q.cell_shape[i] == CellShape::Panel)
        .map(|i| (m.u[i] - m.u[i - 1]).abs() / (q.nodes[i] - q.nodes[i - 1]).norm())
        .fold(0.0, f64::max)
}

/// Pass/fail of each check in a [`VerificationReport`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PassFlags {
    pub converged: bool,
    pub support_residual: bool,
    pub offsupport_residual: bool,
    pub energy_identity: bool,
    pub outer_boundary_coverage: bool,
    pub interior_vacancy: bool,
    pub psd: bool,
    pub eq_of_state: bool,
}

impl PassFlags {
    pub fn all(&self) -> bool {
        self.converged
            && self.support_residual
            && self.offsupport_residual
            && self.energy_identity
            && self.outer_boundary_coverage
            && self.interior_vacancy
            && self.psd
            && self.eq_of_state
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub max_support_residual: f64,
    pub min_offsupport_residual: f64,
    pub excluded_max_support_residual: f64,
    pub excluded_min_offsupport_residual: f64,
    pub energy_identity_gap: f64,
    pub outer_boundary_coverage: f64,
    pub interior_vacancy: f64,
    pub psd_min_eigenvalue: f64,
    pub eq_of_state_max_residual: f64,
    pub pass_flags: PassFlags,
    pub notes: Vec<String>,
}

/// Everything [`verify`] needs.
pub struct VerifyInputs<'a> {
    pub form: &'a QuadraticForm,
    pub density: &'a DiscreteMeasure,
    pub status: SolveStatus,
    /// Temporal solve and its form, when a second right-hand side is set.
    pub temporal: Option<(&'a QuadraticForm, &'a DiscreteMeasure)>,
    pub spec: &'a SupportSpec,
    pub hypotheses: SupportHypotheses,
    pub tolerances: Tolerances,
}

/// Run all checks and collect them in a report.
pub fn verify(inputs: &VerifyInputs) -> Result<VerificationReport> {
    let tol = &inputs.tolerances;
    let form = inputs.form;
    let m = inputs.density;
    let bound = tol.residual_factor * tol.solver_tol;
    let mut notes = Vec::new();

    let var = verify_variational(form, m, tol)?;
    let energy_gap = energy_identity_gap(form, &m.u);
    let geometry = check_support_geometry(m, inputs.spec, inputs.hypotheses);
    notes.extend(geometry.notes.iter().cloned());

    let (psd_min, psd_pass) = match psd_check(form, tol.eigen_limit) {
        Ok(p) => {
            if p.warning {
                notes.push(format!(
                    "psd: breather kernel has no positivity guarantee, measured min eigenvalue {:e}",
                    p.min_eigenvalue
                ));
            }
            (p.min_eigenvalue, p.passes(tol.psd_relative) || p.warning)
        }
        Err(NdrError::EigenLimit { n, limit }) => {
            notes.push(format!("psd skipped: n = {n} exceeds dense eigen limit {limit}"));
            (0.0, true)
        }
        Err(e) => return Err(e),
    };

    let mut eq_max = 0.0;
    let mut eq_pass = true;
    match inputs.temporal {
        Some((tform, tm)) if form.kernel == KernelKind::NlsSoliton => {
            let r = equation_of_state_residual(&form.quadrature, &m.u, &tm.u, form.kernel, m.threshold)?;
            let keep: Vec<bool> = form
                .quadrature
                .exclusion_mask(tol.exclusion_cells, tol.real_axis_fraction)
                .iter()
                .map(|e| !e)
                .collect();
            eq_max = r.max_over(&keep);
            eq_pass = eq_max <= tol.eq_of_state_max;
            let tvar = verify_variational(tform, tm, tol)?;
            if tvar.max_support_residual.max(tvar.excluded_max_support_residual) > bound {
                notes.push(format!(
                    "temporal solve residual {:e} exceeds {:e}",
                    tvar.max_support_residual.max(tvar.excluded_max_support_residual),
                    bound
                ));
                eq_pass = false;
            }
        }
        Some(_) => notes.push("equation of state skipped: defined for the soliton kernel only".into()),
        None => notes.push("equation of state skipped: no temporal right-hand side".into()),
    }

    let n = form.len() as f64;
    let pass_flags = PassFlags {
        converged: inputs.status == SolveStatus::Converged,
        support_residual: var.max_support_residual.max(var.excluded_max_support_residual) <= bound,
        offsupport_residual: var.min_offsupport_residual.min(var.excluded_min_offsupport_residual) >= -bound,
        energy_identity: energy_gap <= n * tol.solver_tol,
        outer_boundary_coverage: geometry.coverage >= tol.coverage_min,
        interior_vacancy: geometry.vacancy >= tol.vacancy_min,
        psd: psd_pass,
        eq_of_state: eq_pass,
    };
    Ok(VerificationReport {
        max_support_residual: var.max_support_residual,
        min_offsupport_residual: var.min_offsupport_residual,
        excluded_max_support_residual: var.excluded_max_support_residual,
        excluded_min_offsupport_residual: var.excluded_min_offsupport_residual,
        energy_identity_gap: energy_gap,
        outer_boundary_coverage: geometry.coverage,
        interior_vacancy: geometry.vacancy,
        psd_min_eigenvalue: psd_min,
        eq_of_state_max_residual: eq_max,
        pass_flags,
        notes,
    })
}

/// Closed-form density available for a problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Oracle {
    /// Semicircle `|z| = rho` condensate.
    Semicircle { rho: f64 },
    /// Box condensate on `[0, iq]`.
    Box { q: f64 },
    /// Bound-state condensate of a band system.
    BoundState { bands: BandSystem },
    /// Box condensate mapped to the KdV half-line.
    KdvBox { q: f64 },
}

/// How oracle errors are measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorNorm {
    /// `|u - u*| / |u*|`.
    Relative,
    /// `|u - u*| sqrt(min(1, d / diam))`, `d` the distance to the nearest
    /// singular point.
    WeightedAbsolute,
}

/// Oracle prepared for repeated evaluation.
#[derive(Debug, Clone)]
pub enum OracleEval {
    Semicircle(f64),
    Box(f64),
    BoundState(BandPolynomial),
    KdvBox(f64),
}

impl Oracle {
    pub fn prepare(&self) -> Result<OracleEval> {
        Ok(match self {
            Oracle::Semicircle { rho } => OracleEval::Semicircle(*rho),
            Oracle::Box { q } => OracleEval::Box(*q),
            Oracle::BoundState { bands } => OracleEval::BoundState(solve_band_polynomial(bands)?),
            Oracle::KdvBox { q } => OracleEval::KdvBox(*q),
        })
    }

    pub fn norm(&self) -> ErrorNorm {
        match self {
            Oracle::Semicircle { .. } | Oracle::BoundState { .. } => ErrorNorm::Relative,
            Oracle::Box { .. } | Oracle::KdvBox { .. } => ErrorNorm::WeightedAbsolute,
        }
    }
}

impl OracleEval {
    /// Oracle density at a node.
    pub fn density(&self, z: ComplexPoint) -> Result<f64> {
        match self {
            OracleEval::Semicircle(rho) => Ok(semicircle_condensate(*rho, z)?.0),
            OracleEval::Box(q) => box_condensate(*q, z),
            OracleEval::BoundState(p) => bound_state_density(p, z),
            OracleEval::KdvBox(q) => Ok(0.5 * box_condensate(*q, Complex64::new(0.0, z.re))?),
        }
    }
}

/// Pointwise oracle errors at the nodes outside the exclusion mask.
pub fn oracle_errors(q: &Quadrature, u: &[f64], oracle: &OracleEval, norm: ErrorNorm, excluded: &[bool]) -> Result<Vec<Option<f64>>> {
    (0..q.len())
        .map(|i| {
            if excluded[i] {
                return Ok(None);
            }
            let exact = oracle.density(q.nodes[i])?;
            let diff = (u[i] - exact).abs();
            Ok(Some(match norm {
                ErrorNorm::Relative => diff / exact.abs(),
                ErrorNorm::WeightedAbsolute => {
                    let d = q
                        .singular_points
                        .iter()
                        .map(|p| (q.nodes[i] - p).norm())
                        .fold(f64::INFINITY, f64::min);
                    diff * (d / q.diameter).min(1.0).sqrt()
                }
            }))
        })
        .collect()
}

/// Problem with a closed-form density, used by [`convergence_study`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleProblem {
    pub support: SupportSpec,
    pub kernel: KernelKind,
    pub rhs: RhsKind,
    pub oracle: Option<Oracle>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub n: usize,
    pub error: f64,
    pub observed_order: Option<f64>,
}

/// Solve at each node count and compare with the oracle on a common region:
/// the exclusion radius is fixed at `exclusion_cells` cells of the coarsest
/// level.
pub fn convergence_study(
    problem: &OracleProblem,
    node_counts: &[usize],
    tol: &Tolerances,
    opts: &SolveOptions,
) -> Result<Vec<ConvergenceRow>> {
    let oracle = problem.oracle.as_ref().ok_or(NdrError::NoOracle)?;
    let eval = oracle.prepare()?;
    let length = problem.support.total_measure();
    let coarsest = node_counts.iter().copied().min().ok_or(NdrError::EmptySupport)?;
    let radius = tol.exclusion_cells * length / coarsest as f64;
    let errors = Exec::default().map(node_counts.len(), |k| -> Result<f64> {
        let n = node_counts[k];
        let q = Arc::new(discretize_contour(&problem.support, n as f64 / length)?);
        let form = assemble_form(Arc::clone(&q), problem.kernel, problem.rhs.clone(), &SigmaSpec::Zero)?;
        let (m, rep) = solve_nonnegative(&form, opts);
        if rep.status == SolveStatus::NotPSD {
            return Err(NdrError::NotPositiveDefinite);
        }
        let excluded = q.exclusion_mask_radius(radius, tol.real_axis_fraction);
        let errs = oracle_errors(&q, &m.u, &eval, oracle.norm(), &excluded)?;
        Ok(errs.into_iter().flatten().fold(0.0, f64::max))
    });
    let errors = errors.into_iter().collect::<Result<Vec<_>>>()?;
    Ok((0..node_counts.len())
        .map(|k| ConvergenceRow {
            n: node_counts[k],
            error: errors[k],
            observed_order: (k > 0).then(|| {
                (errors[k - 1] / errors[k]).ln() / (node_counts[k] as f64 / node_counts[k - 1] as f64).ln()
            }),
        })
        .collect())
}

/// Outcome of [`reconstruction_test`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reconstruction {
    pub max_relative_error: f64,
    pub compared_nodes: usize,
    pub min_sigma: f64,
}

/// Prescribe `u* = c |z - a|^{-1/2}` on a segment through `a`, build
/// `σ = c⁻¹ |z - a|^{1/2} (φ - Gμ*)` from an accurate quadrature of `Gμ*`,
/// solve with that `σ` and compare with `u*` away from `a`.
pub fn reconstruction_test(
    from: ComplexPoint,
    to: ComplexPoint,
    a: ComplexPoint,
    c: f64,
    nodes_per_unit: f64,
    exclusion_cells: f64,
    opts: &SolveOptions,
) -> Result<Reconstruction> {
    let spec = SupportSpec::new().with(Primitive::Segment { from, to });
    let q = Arc::new(discretize_contour(&spec, nodes_per_unit)?);
    let length = (to - from).norm();
    let dir = (to - from) / length;
    let s_a = ((a - from) / dir).re;
    if !(s_a > 0.0 && s_a < length) || ((a - from) / dir).im.abs() > 1e-12 {
        return Err(NdrError::InvalidPrimitive {
            index: 0,
            reason: "reconstruction point must be interior to the segment".into(),
        });
    }
    let target: Vec<f64> = q.nodes.iter().map(|z| c / (z - a).norm().sqrt()).collect();
    let potentials = Exec::default().map(q.len(), |i| -> Result<f64> {
        let z = q.nodes[i];
        let s_z = ((z - from) / dir).re;
        let mut breaks = vec![0.0, s_a, s_z, length];
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        tanh_sinh_split(
            |s, _, _| {
                let w = from + dir * s;
                if w == z || w == a {
                    return 0.0;
                }
                kernel_value(KernelKind::NlsSoliton, z, w).unwrap_or(0.0) * c / (s - s_a).abs().sqrt()
            },
            &breaks,
            1e-11,
        )
    });
    let factor = potentials
        .into_iter()
        .zip(&q.nodes)
        .map(|(g, z)| Ok(z.im - g?))
        .collect::<Result<Vec<f64>>>()?;
    let sigma = SigmaSpec::PowerDistance {
        a,
        exponent: 0.5,
        scale: c,
        factor,
    };
    let sigma_values = sigma.values(&q)?;
    let form = assemble_form(Arc::clone(&q), KernelKind::NlsSoliton, RhsKind::NlsDensity, &sigma)?;
    let (m, rep) = solve_nonnegative(&form, opts);
    if rep.status == SolveStatus::NotPSD {
        return Err(NdrError::NotPositiveDefinite);
    }
    let mut max_relative_error = 0.0f64;
    let mut compared = 0;
    for i in 0..q.len() {
        if (q.nodes[i] - a).norm() < exclusion_cells * q.cell_size[i] {
            continue;
        }
        compared += 1;
        max_relative_error = max_relative_error.max((m.u[i] - target[i]).abs() / target[i]);
    }
    Ok(Reconstruction {
        max_relative_error,
        compared_nodes: compared,
        min_sigma: sigma_values.iter().cloned().fold(f64::INFINITY, f64::min),
    })
}

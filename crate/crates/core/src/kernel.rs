//! Green, breather and KdV kernels, NDR right-hand sides and assembly of the
//! discretized energy.
//!
//! All kernels are the bare logarithms `log|(w - z̄)/(w - z)|` etc., without
//! a `1/π` prefactor. With this normalization the condensate densities come
//! out as `u = Im z / (πρ)` on the semicircle and `y / (π sqrt(q² - y²))` on
//! the box.

use std::f64::consts::PI;
use std::io::{self, Write};
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{NdrError, Result};
use crate::exec::Exec;
use crate::geometry::{CellShape, ComplexPoint, Domain, Quadrature};
use crate::solver::DiscreteMeasure;

/// Minus the mean of `log|x - y|` for `x, y` uniform in the unit square.
pub const SQUARE_LOG_CONSTANT: f64 = 25.0 / 12.0 - PI / 3.0 - std::f64::consts::LN_2 / 3.0;

/// Interaction kernel of the dispersion relation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum KernelKind {
    NlsSoliton,
    NlsBreather { delta0: f64 },
    Kdv,
}

impl KernelKind {
    /// Tag used in the binary kernel dump.
    pub fn tag(&self) -> u64 {
        match self {
            KernelKind::NlsSoliton => 0,
            KernelKind::NlsBreather { .. } => 1,
            KernelKind::Kdv => 2,
        }
    }

    pub fn domain(&self) -> Domain {
        match self {
            KernelKind::Kdv => Domain::KdvLine,
            _ => Domain::UpperHalfPlane,
        }
    }
}

/// Right-hand side `φ` of the dispersion relation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum RhsKind {
    NlsDensity,
    NlsTemporal,
    BreatherDensity { delta0: f64 },
    BreatherTemporal { delta0: f64 },
    KdvDensity,
    KdvTemporal,
    Constant { value: f64 },
    Tabulated { values: Vec<f64> },
}

impl RhsKind {
    /// Whether the kind is declared positive and superharmonic on the
    /// spectral domain.
    pub fn is_positive_superharmonic(&self) -> bool {
        match self {
            RhsKind::NlsDensity | RhsKind::KdvDensity | RhsKind::BreatherDensity { .. } => true,
            RhsKind::Constant { value } => *value > 0.0,
            _ => false,
        }
    }

    pub fn domain(&self) -> Option<Domain> {
        match self {
            RhsKind::KdvDensity | RhsKind::KdvTemporal => Some(Domain::KdvLine),
            RhsKind::Constant { .. } | RhsKind::Tabulated { .. } => None,
            _ => Some(Domain::UpperHalfPlane),
        }
    }
}

/// Nonnegative weight `σ` of the density term.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SigmaSpec {
    Zero,
    Constant {
        value: f64,
    },
    Tabulated {
        values: Vec<f64>,
    },
    /// `σ_i = factor_i |z_i - a|^exponent / scale`.
    PowerDistance {
        a: ComplexPoint,
        exponent: f64,
        scale: f64,
        factor: Vec<f64>,
    },
}

impl SigmaSpec {
    pub fn is_zero(&self) -> bool {
        matches!(self, SigmaSpec::Zero)
    }

    /// Values at the nodes of `q`.
    pub fn values(&self, q: &Quadrature) -> Result<Vec<f64>> {
        let n = q.len();
        let check_len = |len: usize| {
            if len == n {
                Ok(())
            } else {
                Err(NdrError::DimensionMismatch {
                    expected: n,
                    got: len,
                })
            }
        };
        let values = match self {
            SigmaSpec::Zero => vec![0.0; n],
            SigmaSpec::Constant { value } => vec![*value; n],
            SigmaSpec::Tabulated { values } => {
                check_len(values.len())?;
                values.clone()
            }
            SigmaSpec::PowerDistance {
                a,
                exponent,
                scale,
                factor,
            } => {
                check_len(factor.len())?;
                q.nodes
                    .iter()
                    .zip(factor)
                    .map(|(z, f)| f * (z - a).norm().powf(*exponent) / scale)
                    .collect()
            }
        };
        if let Some((node, &value)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(**v >= 0.0) || !v.is_finite())
        {
            return Err(NdrError::NegativeSigma { node, value });
        }
        Ok(values)
    }
}

/// Breather branch `R₀(z) = sqrt(z² + δ₀²)` with `R₀(z) ~ z` at infinity and
/// the cut on `[-iδ₀, iδ₀]`.
pub fn breather_r0(z: ComplexPoint, delta0: f64) -> Result<ComplexPoint> {
    if delta0 == 0.0 {
        return Ok(z);
    }
    if z.re == 0.0 && z.im.abs() <= delta0 {
        return Err(NdrError::OutsideDomain {
            what: "breather branch cut",
            re: z.re,
            im: z.im,
        });
    }
    let d2 = delta0 * delta0;
    Ok(z * (Complex64::new(1.0, 0.0) + d2 / (z * z)).sqrt())
}

fn check_upper(z: ComplexPoint, what: &'static str) -> Result<()> {
    if z.im < 0.0 || !z.re.is_finite() || !z.im.is_finite() {
        return Err(NdrError::OutsideDomain {
            what,
            re: z.re,
            im: z.im,
        });
    }
    Ok(())
}

fn check_kdv(z: ComplexPoint) -> Result<()> {
    if z.im != 0.0 || !(z.re >= 0.0) || !z.re.is_finite() {
        return Err(NdrError::OutsideDomain {
            what: "KdV half-line",
            re: z.re,
            im: z.im,
        });
    }
    Ok(())
}

fn breather_term(z: ComplexPoint, w: ComplexPoint, delta0: f64) -> Result<f64> {
    let d2 = delta0 * delta0;
    let rz = breather_r0(z, delta0)?;
    let rw = breather_r0(w, delta0)?;
    let num = rz * rw + z * w + d2;
    let den = rz.conj() * rw + z.conj() * w + d2;
    Ok((num.norm() / den.norm()).ln())
}

/// Kernel value `K(z, w)` for `z ≠ w`.
pub fn kernel_value(kind: KernelKind, z: ComplexPoint, w: ComplexPoint) -> Result<f64> {
    if z == w {
        return Err(NdrError::KernelSingular);
    }
    match kind {
        KernelKind::NlsSoliton => {
            check_upper(z, "upper half-plane kernel")?;
            check_upper(w, "upper half-plane kernel")?;
            Ok(((w - z.conj()).norm() / (w - z).norm()).ln())
        }
        KernelKind::NlsBreather { delta0 } => {
            check_upper(z, "upper half-plane kernel")?;
            check_upper(w, "upper half-plane kernel")?;
            let soliton = ((w - z.conj()).norm() / (w - z).norm()).ln();
            Ok(soliton + breather_term(z, w, delta0)?)
        }
        KernelKind::Kdv => {
            check_kdv(z)?;
            check_kdv(w)?;
            Ok(((w.re + z.re).abs() / (w.re - z.re).abs()).ln())
        }
    }
}

/// Smooth remainder of the kernel at coincidence, `K(z, w) + log|w - z|` as
/// `w → z`.
pub fn kernel_smooth_part(kind: KernelKind, z: ComplexPoint) -> Result<f64> {
    match kind {
        KernelKind::NlsSoliton => {
            check_upper(z, "upper half-plane kernel")?;
            Ok((2.0 * z.im).ln())
        }
        KernelKind::NlsBreather { delta0 } => {
            check_upper(z, "upper half-plane kernel")?;
            Ok((2.0 * z.im).ln() + breather_term(z, z, delta0)?)
        }
        KernelKind::Kdv => {
            check_kdv(z)?;
            Ok((2.0 * z.re).ln())
        }
    }
}

/// `∫∫ -log|x - y|` over a cell of weight `w`, divided by nothing: the exact
/// self-interaction of a flat panel of length `w` or a square of area `w`.
pub fn cell_self_energy(shape: CellShape, w: f64) -> f64 {
    match shape {
        CellShape::Panel => w * w * (1.5 - w.ln()),
        CellShape::Square => w * w * (-0.5 * w.ln() + SQUARE_LOG_CONSTANT),
    }
}

/// Diagonal entry `A_ii` of the assembled matrix.
pub fn diagonal_entry(kind: KernelKind, q: &Quadrature, i: usize) -> Result<f64> {
    let w = q.weights[i];
    Ok(w * w * kernel_smooth_part(kind, q.nodes[i])? + cell_self_energy(q.cell_shape[i], w))
}

fn breather_delta(rhs_delta: f64, kind: &RhsKind) -> Result<f64> {
    if !(rhs_delta > 0.0) {
        return Err(NdrError::OutsideDomain {
            what: match kind {
                RhsKind::BreatherDensity { .. } => "breather density with nonpositive delta0",
                _ => "breather temporal with nonpositive delta0",
            },
            re: rhs_delta,
            im: 0.0,
        });
    }
    Ok(rhs_delta)
}

/// Right-hand side `φ(z)`. Tabulated values need a node index, see
/// [`rhs_values`].
pub fn rhs_value(kind: &RhsKind, z: ComplexPoint) -> Result<f64> {
    match kind {
        RhsKind::NlsDensity => {
            check_upper(z, "fNLS right-hand side")?;
            Ok(z.im)
        }
        RhsKind::NlsTemporal => {
            check_upper(z, "fNLS right-hand side")?;
            Ok(-4.0 * z.im * z.re)
        }
        RhsKind::BreatherDensity { delta0 } => {
            check_upper(z, "breather right-hand side")?;
            Ok(breather_r0(z, breather_delta(*delta0, kind)?)?.im)
        }
        RhsKind::BreatherTemporal { delta0 } => {
            check_upper(z, "breather right-hand side")?;
            Ok(-2.0 * (z * breather_r0(z, breather_delta(*delta0, kind)?)?).im)
        }
        RhsKind::KdvDensity => {
            check_kdv(z)?;
            Ok(0.5 * z.re)
        }
        RhsKind::KdvTemporal => {
            check_kdv(z)?;
            Ok(-2.0 * z.re.powi(3))
        }
        RhsKind::Constant { value } => Ok(*value),
        RhsKind::Tabulated { .. } => Err(NdrError::TabulatedNeedsNodes),
    }
}

/// Right-hand side at every node of `q`.
pub fn rhs_values(kind: &RhsKind, q: &Quadrature) -> Result<Vec<f64>> {
    match kind {
        RhsKind::Tabulated { values } => {
            if values.len() != q.len() {
                return Err(NdrError::DimensionMismatch {
                    expected: q.len(),
                    got: values.len(),
                });
            }
            Ok(values.clone())
        }
        _ => q.nodes.iter().map(|&z| rhs_value(kind, z)).collect(),
    }
}

/// Discretized energy `J(u) = uᵀ(A + diag S)u - 2bᵀu`.
#[derive(Debug, Clone)]
pub struct QuadraticForm {
    /// Green energy matrix with weights and self-energy diagonal.
    pub a: Arc<DMatrix<f64>>,
    /// `σ_i w_i`.
    pub s: Vec<f64>,
    /// `φ_i w_i`.
    pub b: Vec<f64>,
    pub phi: Vec<f64>,
    pub sigma: Vec<f64>,
    pub kernel: KernelKind,
    pub rhs: RhsKind,
    pub quadrature: Arc<Quadrature>,
}

impl QuadraticForm {
    /// Form from an explicit symmetric matrix, `S` and `b`, on unit-weight
    /// placeholder nodes `i, 2i, …`. For solver tests on synthetic
    /// instances.
    pub fn from_parts(a: DMatrix<f64>, s: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        let n = b.len();
        if a.nrows() != n || a.ncols() != n {
            return Err(NdrError::DimensionMismatch {
                expected: n,
                got: a.nrows(),
            });
        }
        if s.len() != n {
            return Err(NdrError::DimensionMismatch {
                expected: n,
                got: s.len(),
            });
        }
        let nodes = (1..=n).map(|k| Complex64::new(0.0, k as f64)).collect();
        let q = Quadrature::from_panels(nodes, vec![1.0; n], Domain::UpperHalfPlane)?;
        Ok(Self {
            a: Arc::new(a),
            sigma: s.clone(),
            s,
            phi: b.clone(),
            rhs: RhsKind::Tabulated { values: b.clone() },
            b,
            kernel: KernelKind::NlsSoliton,
            quadrature: Arc::new(q),
        })
    }

    pub fn len(&self) -> usize {
        self.b.len()
    }

    pub fn is_empty(&self) -> bool {
        self.b.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.quadrature.weights
    }

    /// Same matrix and σ with a different right-hand side.
    pub fn with_rhs(&self, rhs: RhsKind) -> Result<Self> {
        let phi = rhs_values(&rhs, &self.quadrature)?;
        let b = phi.iter().zip(self.weights()).map(|(p, w)| p * w).collect();
        Ok(Self {
            a: Arc::clone(&self.a),
            s: self.s.clone(),
            b,
            phi,
            sigma: self.sigma.clone(),
            kernel: self.kernel,
            rhs,
            quadrature: Arc::clone(&self.quadrature),
        })
    }

    /// `(A + diag S) u`.
    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        let n = self.len();
        let mut out = vec![0.0; n];
        // column-major storage: accumulate column by column
        for (j, &uj) in u.iter().enumerate() {
            if uj == 0.0 {
                continue;
            }
            let col = self.a.column(j);
            for i in 0..n {
                out[i] += col[i] * uj;
            }
        }
        for i in 0..n {
            out[i] += self.s[i] * u[i];
        }
        out
    }

    /// `J(u)`.
    pub fn energy(&self, u: &[f64]) -> f64 {
        let au = self.apply(u);
        u.iter()
            .zip(&au)
            .zip(&self.b)
            .map(|((ui, ai), bi)| ui * ai - 2.0 * bi * ui)
            .sum()
    }

    /// `∇J(u) = 2((A + diag S)u - b)`.
    pub fn gradient(&self, u: &[f64]) -> Vec<f64> {
        self.apply(u)
            .iter()
            .zip(&self.b)
            .map(|(a, b)| 2.0 * (a - b))
            .collect()
    }

    /// Max-abs entry of `A`.
    pub fn max_abs(&self) -> f64 {
        self.a.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Binary dump: `n` and kind tag as little-endian `u64`, then `A` as
    /// row-major little-endian `f64`.
    pub fn write_kernel_bin<W: Write>(&self, mut out: W) -> io::Result<()> {
        let n = self.len();
        out.write_all(&(n as u64).to_le_bytes())?;
        out.write_all(&self.kernel.tag().to_le_bytes())?;
        for i in 0..n {
            for j in 0..n {
                out.write_all(&self.a[(i, j)].to_le_bytes())?;
            }
        }
        Ok(())
    }
}

/// Assemble the quadratic form with the default execution policy.
pub fn assemble_form(
    q: Arc<Quadrature>,
    kernel: KernelKind,
    rhs: RhsKind,
    sigma: &SigmaSpec,
) -> Result<QuadraticForm> {
    assemble_form_with(Exec::default(), q, kernel, rhs, sigma)
}

/// Kernel matrix `A` alone.
pub fn assemble_matrix(exec: Exec, q: &Quadrature, kernel: KernelKind) -> Result<DMatrix<f64>> {
    let n = q.len();
    if n == 0 {
        return Err(NdrError::EmptySupport);
    }
    if q.domain != kernel.domain() {
        let z = q.nodes[0];
        return Err(NdrError::OutsideDomain {
            what: match kernel {
                KernelKind::Kdv => "KdV kernel (nodes are not on the KdV half-line)",
                _ => "upper half-plane kernel (nodes are on the KdV half-line)",
            },
            re: z.re,
            im: z.im,
        });
    }
    let diag = (0..n)
        .map(|i| diagonal_entry(kernel, q, i))
        .collect::<Result<Vec<_>>>()?;
    let mut data = vec![0.0; n * n];
    let failure = std::sync::Mutex::new(None);
    // symmetric matrix: column j of the column-major buffer is row j
    exec.fill_rows(&mut data, n, |j, col| {
        let zj = q.nodes[j];
        let wj = q.weights[j];
        for i in 0..n {
            col[i] = if i == j {
                diag[i]
            } else {
                match kernel_value(kernel, q.nodes[i], zj) {
                    Ok(k) => k * q.weights[i] * wj,
                    Err(e) => {
                        failure.lock().unwrap().get_or_insert(e);
                        f64::NAN
                    }
                }
            };
        }
    });
    if let Some(e) = failure.into_inner().unwrap() {
        return Err(e);
    }
    let mut a = DMatrix::from_vec(n, n, data);
    // exact symmetry regardless of floating-point evaluation order
    for j in 0..n {
        for i in (j + 1)..n {
            let m = 0.5 * (a[(i, j)] + a[(j, i)]);
            a[(i, j)] = m;
            a[(j, i)] = m;
        }
    }
    Ok(a)
}

/// Assemble the quadratic form with an explicit execution policy.
pub fn assemble_form_with(
    exec: Exec,
    q: Arc<Quadrature>,
    kernel: KernelKind,
    rhs: RhsKind,
    sigma: &SigmaSpec,
) -> Result<QuadraticForm> {
    if let Some(d) = rhs.domain() {
        if d != q.domain {
            let z = q.nodes.first().copied().unwrap_or_default();
            return Err(NdrError::OutsideDomain {
                what: "right-hand side",
                re: z.re,
                im: z.im,
            });
        }
    }
    let a = assemble_matrix(exec, &q, kernel)?;
    let sigma = sigma.values(&q)?;
    let phi = rhs_values(&rhs, &q)?;
    let s = sigma.iter().zip(&q.weights).map(|(s, w)| s * w).collect();
    let b = phi.iter().zip(&q.weights).map(|(p, w)| p * w).collect();
    Ok(QuadraticForm {
        a: Arc::new(a),
        s,
        b,
        phi,
        sigma,
        kernel,
        rhs,
        quadrature: q,
    })
}

/// Value of a Green potential, flagged when evaluated at a node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotentialValue {
    pub value: f64,
    /// Node the point coincides with; the value then uses the cell
    /// self-energy for the coincident term.
    pub at_node: Option<usize>,
}

/// `Gμ(z) = Σ_i K(z, z_i) u_i w_i`.
pub fn green_potential_at(m: &DiscreteMeasure, kernel: KernelKind, z: ComplexPoint) -> Result<PotentialValue> {
    green_potential(&m.quadrature, &m.u, kernel, z)
}

/// Green potential of the density `u` on the nodes of `q`.
pub fn green_potential(q: &Quadrature, u: &[f64], kernel: KernelKind, z: ComplexPoint) -> Result<PotentialValue> {
    if u.len() != q.len() {
        return Err(NdrError::DimensionMismatch {
            expected: q.len(),
            got: u.len(),
        });
    }
    let mut value = 0.0;
    let mut at_node = None;
    for (i, (&zi, (&ui, &wi))) in q.nodes.iter().zip(u.iter().zip(&q.weights)).enumerate() {
        if ui == 0.0 {
            if zi == z {
                at_node = Some(i);
            }
            continue;
        }
        if zi == z {
            at_node = Some(i);
            value += diagonal_entry(kernel, q, i)? * ui / wi;
        } else {
            value += kernel_value(kernel, z, zi)? * ui * wi;
        }
    }
    Ok(PotentialValue { value, at_node })
}

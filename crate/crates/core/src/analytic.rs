//! Closed-form condensate densities: semicircle, box, bound-state band
//! systems on the imaginary axis, and the KdV substitution.
//!
//! On the imaginary axis `z = iy` the band polynomial reduces to a real
//! polynomial and `R(iy)²` to the real product
//! `Q(y) = Π (e² - y²)` over the band endpoints `e`. Gap integrals of
//! `P dw / R` become real integrals of `p(y) / sqrt|Q(y)|` with
//! inverse-square-root endpoint singularities.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{NdrError, Result};
use crate::geometry::ComplexPoint;
use crate::kernel::{kernel_value, KernelKind};
use crate::quad::tanh_sinh;

/// Tolerance on `|z| - ρ` and on `Re z` for points that should lie on a
/// circle or on the imaginary axis.
pub const ON_CURVE_TOL: f64 = 1e-10;

/// Absolute tolerance of gap integrals.
pub const GAP_TOL: f64 = 1e-12;

/// Semicircle condensate `(u, v)` at `z` with `|z| = ρ`.
pub fn semicircle_condensate(rho: f64, z: ComplexPoint) -> Result<(f64, f64)> {
    if !(rho > 0.0) || (z.norm() - rho).abs() > ON_CURVE_TOL || z.im < -ON_CURVE_TOL {
        return Err(NdrError::OffCircle { rho });
    }
    let u = z.im / (PI * rho);
    let v = -4.0 * (z * z).im / (PI * rho);
    Ok((u, v))
}

fn imaginary_part_on_axis(z: ComplexPoint) -> Result<f64> {
    if z.re.abs() > ON_CURVE_TOL || z.im < 0.0 {
        return Err(NdrError::NotOnBand(format!("{z} is not on the positive imaginary axis")));
    }
    Ok(z.im)
}

/// Box condensate density `y / (π sqrt(q² - y²))` at `z = iy`.
pub fn box_condensate(q: f64, z: ComplexPoint) -> Result<f64> {
    let y = imaginary_part_on_axis(z)?;
    if y >= q {
        return Err(NdrError::EndpointSingularity);
    }
    Ok(y / (PI * ((q - y) * (q + y)).sqrt()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BandKind {
    /// Bands `[0, b₀]` and `[a_j, b_j]`, endpoints `b₀ < a₁ < b₁ < …`.
    OddBands,
    /// Bands `[a_j, b_j]`, endpoints `a₁ < b₁ < …`.
    EvenBands,
}

/// Band endpoints on the positive imaginary axis, in increasing order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandSystem {
    pub kind: BandKind,
    pub endpoints: Vec<f64>,
}

impl BandSystem {
    pub fn odd(endpoints: &[f64]) -> Result<Self> {
        let s = Self {
            kind: BandKind::OddBands,
            endpoints: endpoints.to_vec(),
        };
        s.validate()?;
        Ok(s)
    }

    pub fn even(endpoints: &[f64]) -> Result<Self> {
        let s = Self {
            kind: BandKind::EvenBands,
            endpoints: endpoints.to_vec(),
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let e = &self.endpoints;
        match self.kind {
            BandKind::OddBands if e.len() % 2 == 0 => {
                return Err(NdrError::InvalidBands(
                    "odd band system needs b0 followed by (a_j, b_j) pairs".into(),
                ))
            }
            BandKind::EvenBands if e.is_empty() || e.len() % 2 == 1 => {
                return Err(NdrError::InvalidBands(
                    "even band system needs at least one (a_j, b_j) pair".into(),
                ))
            }
            _ => {}
        }
        if !e.iter().all(|v| v.is_finite()) || !(e[0] > 0.0) {
            return Err(NdrError::InvalidBands("endpoints must be finite and positive".into()));
        }
        if let Some(k) = e.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(NdrError::InvalidBands(format!(
                "endpoints not strictly increasing at position {}",
                k + 1
            )));
        }
        Ok(())
    }

    /// Number of free coefficients, equal to the number of gap conditions.
    pub fn gap_count(&self) -> usize {
        match self.kind {
            BandKind::OddBands => (self.endpoints.len() - 1) / 2,
            BandKind::EvenBands => self.endpoints.len() / 2,
        }
    }

    /// Bands `[lo, hi]` in `y`, bottom to top.
    pub fn bands(&self) -> Vec<(f64, f64)> {
        let e = &self.endpoints;
        match self.kind {
            BandKind::OddBands => std::iter::once((0.0, e[0]))
                .chain(e[1..].chunks(2).map(|c| (c[0], c[1])))
                .collect(),
            BandKind::EvenBands => e.chunks(2).map(|c| (c[0], c[1])).collect(),
        }
    }

    /// Gap `j` (1-based) as `(lo, hi)` in `y`. For even systems gap 1 is the
    /// upper half `(0, a₁)` of the central gap.
    pub fn gap(&self, j: usize) -> Result<(f64, f64)> {
        let count = self.gap_count();
        if j == 0 || j > count {
            return Err(NdrError::GapIndex { index: j, count });
        }
        let bands = self.bands();
        Ok(match self.kind {
            BandKind::OddBands => (bands[j - 1].1, bands[j].0),
            BandKind::EvenBands if j == 1 => (0.0, bands[0].0),
            BandKind::EvenBands => (bands[j - 2].1, bands[j - 1].0),
        })
    }

    /// Maximal band endpoint.
    pub fn top(&self) -> f64 {
        *self.endpoints.last().unwrap()
    }

    /// `|Q(y)|`, with the factors belonging to `near_lo` / `near_hi`
    /// evaluated from the supplied distances `y - near_lo` and `near_hi - y`.
    fn abs_q(&self, y: f64, near: Option<(f64, f64)>, da: f64, db: f64) -> f64 {
        self.endpoints
            .iter()
            .map(|&e| match near {
                Some((lo, _)) if e == lo => da * (y + e),
                Some((_, hi)) if e == hi => db * (y + e),
                _ => ((e - y) * (e + y)).abs(),
            })
            .product()
    }
}

/// Monic band polynomial `P` with its reduced form on the imaginary axis.
///
/// `coefficients[k]` multiplies `z^{2k+1}` for odd systems and `z^{2k}` for
/// even systems; the last coefficient is 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandPolynomial {
    pub bands: BandSystem,
    pub coefficients: Vec<f64>,
}

impl BandPolynomial {
    fn power(&self, k: usize) -> i32 {
        match self.bands.kind {
            BandKind::OddBands => 2 * k as i32 + 1,
            BandKind::EvenBands => 2 * k as i32,
        }
    }

    /// `P(z)`.
    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.coefficients
            .iter()
            .enumerate()
            .map(|(k, c)| c * z.powi(self.power(k)))
            .sum()
    }

    /// Real reduction on the axis: `P(iy) = i p(y)` for odd systems and
    /// `P(iy) = p(y)` for even ones.
    pub fn reduced(&self, y: f64) -> f64 {
        self.coefficients
            .iter()
            .enumerate()
            .map(|(k, c)| {
                let m = self.power(k);
                // i^m with the overall factor i removed for odd powers
                let sign = if (m / 2) % 2 == 0 { 1.0 } else { -1.0 };
                sign * c * y.powi(m)
            })
            .sum()
    }

    /// Zeros of the reduced polynomial in each gap, located by bisection.
    pub fn gap_zeros(&self) -> Result<Vec<Vec<f64>>> {
        (1..=self.bands.gap_count())
            .map(|j| {
                let (lo, hi) = self.bands.gap(j)?;
                Ok(sign_change_roots(|y| self.reduced(y), lo, hi, 400))
            })
            .collect()
    }

    /// Sign of the density formula on band `m`.
    fn band_sign(&self, m: usize) -> f64 {
        let parity = match self.bands.kind {
            BandKind::OddBands => m,
            BandKind::EvenBands => m + 1,
        };
        if parity % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    fn density_on_band(&self, m: usize, y: f64, da: f64, db: f64) -> f64 {
        let (lo, hi) = self.bands.bands()[m];
        let abs_q = self.bands.abs_q(y, Some((lo, hi)), da, db);
        self.band_sign(m) * self.reduced(y) / (PI * abs_q.sqrt())
    }

    /// Density at `y` on band `m`, with accurate endpoint distances.
    pub fn band_density(&self, m: usize, y: f64) -> f64 {
        let (lo, hi) = self.bands.bands()[m];
        self.density_on_band(m, y, y - lo, hi - y)
    }
}

fn sign_change_roots<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, samples: usize) -> Vec<f64> {
    let mut roots = Vec::new();
    let mut x0 = lo;
    let mut f0 = f(lo);
    for k in 1..=samples {
        let x1 = lo + (hi - lo) * k as f64 / samples as f64;
        let f1 = f(x1);
        if f0 == 0.0 && k > 1 {
            roots.push(x0);
        } else if f0 * f1 < 0.0 {
            let (mut a, mut b, mut fa) = (x0, x1, f0);
            for _ in 0..200 {
                let mid = 0.5 * (a + b);
                let fm = f(mid);
                if fm == 0.0 || b - a < 1e-15 * b.abs().max(1.0) {
                    a = mid;
                    b = mid;
                    break;
                }
                if fa * fm < 0.0 {
                    b = mid;
                } else {
                    a = mid;
                    fa = fm;
                }
            }
            roots.push(0.5 * (a + b));
        }
        x0 = x1;
        f0 = f1;
    }
    roots
}

/// `∫ y^m / sqrt|Q(y)| dy` over gap `j`.
fn gap_moment(bands: &BandSystem, j: usize, m: i32) -> Result<f64> {
    let (lo, hi) = bands.gap(j)?;
    tanh_sinh(
        |y, da, db| y.powi(m) / bands.abs_q(y, Some((lo, hi)), da, db).sqrt(),
        lo,
        hi,
        GAP_TOL,
    )
}

/// Reduced gap integral `∫ p(y) / sqrt|Q(y)| dy` over gap `j` (1-based).
pub fn gap_integral(p: &BandPolynomial, j: usize) -> Result<f64> {
    let (lo, hi) = p.bands.gap(j)?;
    tanh_sinh(
        |y, da, db| p.reduced(y) / p.bands.abs_q(y, Some((lo, hi)), da, db).sqrt(),
        lo,
        hi,
        GAP_TOL,
    )
}

/// Solve the gap conditions for the free coefficients of `P`, then check
/// the zero pattern and positivity of the density.
pub fn solve_band_polynomial(bands: &BandSystem) -> Result<BandPolynomial> {
    bands.validate()?;
    let n = bands.gap_count();
    let mut p = BandPolynomial {
        bands: bands.clone(),
        coefficients: vec![0.0; n + 1],
    };
    p.coefficients[n] = 1.0;
    if n > 0 {
        let mut matrix = DMatrix::zeros(n, n);
        let mut rhs = DVector::zeros(n);
        for j in 1..=n {
            for k in 0..=n {
                let m = p.power(k);
                let sign = if (m / 2) % 2 == 0 { 1.0 } else { -1.0 };
                let moment = sign * gap_moment(bands, j, m)?;
                if k < n {
                    matrix[(j - 1, k)] = moment;
                } else {
                    rhs[j - 1] = -moment;
                }
            }
        }
        let scale = matrix.amax();
        let lu = matrix.lu();
        let det_ok = lu.determinant().abs() > 1e-14 * scale.powi(n as i32);
        let solution = lu.solve(&rhs).filter(|_| det_ok).ok_or(NdrError::SingularGapSystem)?;
        if !solution.iter().all(|v| v.is_finite()) {
            return Err(NdrError::SingularGapSystem);
        }
        p.coefficients[..n].copy_from_slice(solution.as_slice());
    }
    check_band_polynomial(&p)?;
    Ok(p)
}

fn check_band_polynomial(p: &BandPolynomial) -> Result<()> {
    for (j, zeros) in p.gap_zeros()?.iter().enumerate() {
        if zeros.len() != 1 {
            return Err(NdrError::BranchInconsistency(format!(
                "gap {} holds {} zeros of P instead of one",
                j + 1,
                zeros.len()
            )));
        }
    }
    for (m, (lo, hi)) in p.bands.bands().into_iter().enumerate() {
        for k in 1..200 {
            let y = lo + (hi - lo) * k as f64 / 200.0;
            if !(p.band_density(m, y) > 0.0) {
                return Err(NdrError::BranchInconsistency(format!(
                    "density is not positive at y = {y} on band {m}"
                )));
            }
        }
    }
    Ok(())
}

/// Where a point of the imaginary axis sits relative to the bands.
fn locate(p: &BandPolynomial, y: f64) -> Result<usize> {
    for (m, (lo, hi)) in p.bands.bands().into_iter().enumerate() {
        let lower_is_endpoint = !(p.bands.kind == BandKind::OddBands && m == 0);
        if y == hi || (y == lo && lower_is_endpoint) {
            return Err(NdrError::EndpointSingularity);
        }
        if y > lo && y < hi || (y == lo && !lower_is_endpoint) {
            return Ok(m);
        }
    }
    Err(NdrError::NotOnBand(format!("iy with y = {y} lies in a gap")))
}

/// Bound-state condensate density `iP(z) / (πR(z))` at `z` on a band.
pub fn bound_state_density(p: &BandPolynomial, z: ComplexPoint) -> Result<f64> {
    let y = imaginary_part_on_axis(z)?;
    let m = locate(p, y)?;
    Ok(p.band_density(m, y))
}

/// `u_KdV(ζ) = ½ u_fNLS(iζ)`.
pub fn kdv_from_nls<F>(u_nls: F) -> impl Fn(f64) -> Result<f64>
where
    F: Fn(ComplexPoint) -> Result<f64>,
{
    move |zeta| Ok(0.5 * u_nls(Complex64::new(0.0, zeta))?)
}

/// Inverse substitution `u_fNLS(iy) = 2 u_KdV(y)`.
pub fn nls_from_kdv<F>(u_kdv: F) -> impl Fn(ComplexPoint) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    move |z| Ok(2.0 * u_kdv(imaginary_part_on_axis(z)?)?)
}

/// Green potential `∫ K(z, iy) u(y) dy` of the bound-state condensate
/// over its bands (including `[0, ib₀]` for odd systems).
pub fn bound_state_potential(p: &BandPolynomial, z: ComplexPoint, tol: f64) -> Result<f64> {
    let mut total = 0.0;
    for (m, (lo, hi)) in p.bands.bands().into_iter().enumerate() {
        let split = (z.re.abs() <= ON_CURVE_TOL && z.im > lo && z.im < hi).then_some(z.im);
        let pieces = match split {
            Some(s) => vec![(lo, s), (s, hi)],
            None => vec![(lo, hi)],
        };
        for (a, b) in pieces {
            total += tanh_sinh(
                |y, da, db| {
                    let w = Complex64::new(0.0, y);
                    if w == z {
                        return 0.0;
                    }
                    // endpoint distances from the quadrature where they are exact
                    let to_lo = if a == lo { da } else { y - lo };
                    let to_hi = if b == hi { db } else { hi - y };
                    let density = p.density_on_band(m, y, to_lo, to_hi);
                    kernel_value(KernelKind::NlsSoliton, z, w).unwrap_or(0.0) * density
                },
                a,
                b,
                tol,
            )?;
        }
    }
    Ok(total)
}

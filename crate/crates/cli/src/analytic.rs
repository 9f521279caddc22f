//! Closed-form densities on plot-ready grids.

use std::f64::consts::PI;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;

use ndr_core::analytic::BandKind;
use ndr_core::prelude::*;
use serde::Serialize;

use crate::error::{CliError, CliResult};
use crate::pipeline::write_json;

pub struct Params {
    pub q: f64,
    pub rho: f64,
    pub bands: Vec<f64>,
    pub even: bool,
    pub n: usize,
}

impl Params {
    fn check(&self) -> CliResult<()> {
        if self.n == 0 {
            return Err(CliError::input("--n: must be positive"));
        }
        Ok(())
    }
}

fn positive(name: &str, x: f64) -> CliResult<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(CliError::input(format!("--{name}: must be positive, got {x}")))
    }
}

fn write_table(out: &Path, header: &[&str], rows: &[Vec<f64>]) -> CliResult<()> {
    fs::create_dir_all(out)?;
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(out.join("analytic.csv"))?));
    w.write_record(header)?;
    for row in rows {
        w.write_record(row.iter().map(|x| format!("{x:.16e}")))?;
    }
    w.flush()?;
    Ok(())
}

/// `u(iy)` at `y = qk/n`, `k = 0..n`, leaving out the singular top.
pub fn box_density(out: &Path, p: &Params) -> CliResult<()> {
    p.check()?;
    positive("q", p.q)?;
    let rows = (0..p.n)
        .map(|k| {
            let y = p.q * k as f64 / p.n as f64;
            Ok(vec![0.0, y, box_condensate(p.q, Complex64::new(0.0, y))?])
        })
        .collect::<CliResult<Vec<_>>>()?;
    write_table(out, &["re", "im", "u"], &rows)
}

/// `u` and `v` at cell-centred angles on `|z| = rho`.
pub fn semicircle(out: &Path, p: &Params) -> CliResult<()> {
    p.check()?;
    positive("rho", p.rho)?;
    let rows = (0..p.n)
        .map(|k| {
            let z = Complex64::from_polar(p.rho, PI * (k as f64 + 0.5) / p.n as f64);
            let (u, v) = semicircle_condensate(p.rho, z)?;
            Ok(vec![z.re, z.im, u, v])
        })
        .collect::<CliResult<Vec<_>>>()?;
    write_table(out, &["re", "im", "u", "v"], &rows)
}

/// Box condensate on the KdV half-line, `x = qk/n`.
pub fn kdv_map(out: &Path, p: &Params) -> CliResult<()> {
    p.check()?;
    positive("q", p.q)?;
    let q = p.q;
    let u = kdv_from_nls(move |z| box_condensate(q, z));
    let rows = (0..p.n)
        .map(|k| {
            let x = q * k as f64 / p.n as f64;
            Ok(vec![x, 0.0, u(x)?])
        })
        .collect::<CliResult<Vec<_>>>()?;
    write_table(out, &["re", "im", "u"], &rows)
}

#[derive(Serialize)]
struct BoundStateSummary {
    kind: BandKind,
    endpoints: Vec<f64>,
    /// Coefficients of `P`, lowest power first.
    coefficients: Vec<f64>,
    /// Zeros of `P` on the imaginary axis, one list per gap.
    gap_zeros: Vec<Vec<f64>>,
}

/// Density on `n` cell-centred points of each band, plus the polynomial in
/// `analytic.json`.
pub fn bound_state(out: &Path, p: &Params) -> CliResult<()> {
    p.check()?;
    let bands = if p.even {
        BandSystem::even(&p.bands)?
    } else {
        BandSystem::odd(&p.bands)?
    };
    let poly = solve_band_polynomial(&bands)?;
    let mut rows = Vec::new();
    for (lo, hi) in bands.bands() {
        for k in 0..p.n {
            let y = lo + (hi - lo) * (k as f64 + 0.5) / p.n as f64;
            rows.push(vec![0.0, y, bound_state_density(&poly, Complex64::new(0.0, y))?]);
        }
    }
    write_table(out, &["re", "im", "u"], &rows)?;
    let summary = BoundStateSummary {
        kind: bands.kind,
        endpoints: p.bands.clone(),
        gap_zeros: poly.gap_zeros()?,
        coefficients: poly.coefficients,
    };
    write_json(&out.join("analytic.json"), &summary)
}

//! Solve, diagnose and serialize: shared by `solve` and `verify`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;
use std::sync::Arc;

use ndr_core::diagnose::{max_potential_excess, probe_grid, verify, VerificationReport, VerifyInputs};
use ndr_core::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::ProblemConfig;
use crate::error::{CliError, CliResult};

/// Probe lattice used for the off-support check `Gμ ≤ φ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeSummary {
    pub seed: u64,
    pub points: usize,
    pub max_potential_excess: f64,
    pub bound: f64,
    pub pass: bool,
}

/// Allowed `max(Gμ - φ)` over the probes. The potential of the discrete
/// measure carries the quadrature error of the cells next to the probes,
/// far above the solver tolerance.
pub const PROBE_BOUND: f64 = 1e-2;

/// Contents of `report.json` and `verify_report.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub nodes: usize,
    pub solve: SolveReport,
    pub temporal_solve: Option<SolveReport>,
    pub verification: VerificationReport,
    pub probes: Option<ProbeSummary>,
}

pub struct Temporal {
    pub form: QuadraticForm,
    pub measure: DiscreteMeasure,
    pub report: SolveReport,
}

/// Signed solve for the temporal right-hand side, on the support of `m`
/// when `σ ≡ 0`.
pub fn temporal_solve(config: &ProblemConfig, form: &QuadraticForm, m: &DiscreteMeasure) -> CliResult<Option<Temporal>> {
    let Some(rhs) = &config.temporal_rhs else {
        return Ok(None);
    };
    let tform = form.with_rhs(rhs.clone())?;
    let restrict = config.sigma.is_zero().then_some(m.support_mask.as_slice());
    let (measure, report) = solve_signed(&tform, restrict, &config.solver)?;
    Ok(Some(Temporal {
        form: tform,
        measure,
        report,
    }))
}

pub fn diagnostics(
    config: &ProblemConfig,
    form: &QuadraticForm,
    m: &DiscreteMeasure,
    status: SolveStatus,
    temporal: Option<(&QuadraticForm, &DiscreteMeasure)>,
) -> CliResult<VerificationReport> {
    Ok(verify(&VerifyInputs {
        form,
        density: m,
        status,
        temporal,
        spec: &config.support,
        hypotheses: config.hypotheses(),
        tolerances: config.tolerances(),
    })?)
}

/// Jittered probe lattice around the support. The bound only follows from
/// the soliton kernel with a positive superharmonic `φ`; other problems get
/// no probe check.
pub fn probes(config: &ProblemConfig, m: &DiscreteMeasure, seed: u64) -> CliResult<Option<ProbeSummary>> {
    if config.kernel != KernelKind::NlsSoliton || !config.hypotheses().phi_positive_superharmonic {
        return Ok(None);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let offset = (rng.random::<f64>(), rng.random::<f64>());
    let points = probe_grid(&m.quadrature, 24, 24, 3.0, offset);
    if points.is_empty() {
        return Ok(None);
    }
    let excess = max_potential_excess(m, config.kernel, &config.rhs, &points)?;
    Ok(Some(ProbeSummary {
        seed,
        points: points.len(),
        max_potential_excess: excess,
        bound: PROBE_BOUND,
        pass: excess <= PROBE_BOUND,
    }))
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

const STATE_HEADER: [&str; 10] = [
    "re",
    "im",
    "weight",
    "u",
    "v",
    "s",
    "residual_u",
    "residual_v",
    "in_support",
    "excluded",
];

pub fn write_states(
    path: &Path,
    form: &QuadraticForm,
    m: &DiscreteMeasure,
    temporal: Option<&Temporal>,
    excluded: &[bool],
) -> CliResult<()> {
    let q = &form.quadrature;
    let r = variational_residual(form, m)?;
    let rv = temporal
        .map(|t| variational_residual(&t.form, &t.measure))
        .transpose()?;
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
    w.write_record(STATE_HEADER)?;
    for i in 0..q.len() {
        let (v, s, res_v) = match (temporal, &rv) {
            (Some(t), Some(rv)) => {
                let v = t.measure.u[i];
                let s = if m.support_mask[i] { num(v / m.u[i]) } else { String::new() };
                (num(v), s, num(rv[i]))
            }
            _ => (String::new(), String::new(), String::new()),
        };
        w.write_record([
            num(q.nodes[i].re),
            num(q.nodes[i].im),
            num(q.weights[i]),
            num(m.u[i]),
            v,
            s,
            num(r[i]),
            res_v,
            (m.support_mask[i] as u8).to_string(),
            (excluded[i] as u8).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Deserialize)]
struct StateRow {
    re: f64,
    im: f64,
    weight: f64,
    u: f64,
    v: Option<f64>,
}

/// Densities read back from a states file, checked against `q`.
pub struct StoredStates {
    pub u: Vec<f64>,
    pub v: Option<Vec<f64>>,
}

pub fn read_states(path: &Path, q: &Quadrature) -> CliResult<StoredStates> {
    let file = File::open(path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    let mut reader = csv::Reader::from_reader(BufReader::new(file));
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    if header != STATE_HEADER {
        return Err(CliError::input(format!("{}: unexpected header {header:?}", path.display())));
    }
    let mut u = Vec::with_capacity(q.len());
    let mut v = Vec::with_capacity(q.len());
    for (i, row) in reader.deserialize::<StateRow>().enumerate() {
        let line = i + 2;
        let row = row.map_err(|e| CliError::input(format!("{} line {line}: {e}", path.display())))?;
        if i >= q.len() {
            return Err(CliError::input(format!(
                "{}: more rows than the {} configured nodes",
                path.display(),
                q.len()
            )));
        }
        let z = q.nodes[i];
        let scale = z.norm().max(1.0);
        if (row.re - z.re).abs() > 1e-12 * scale
            || (row.im - z.im).abs() > 1e-12 * scale
            || (row.weight - q.weights[i]).abs() > 1e-12 * q.weights[i]
        {
            return Err(CliError::input(format!(
                "{} line {line}: node does not match the configured discretization",
                path.display()
            )));
        }
        if !row.u.is_finite() {
            return Err(CliError::input(format!("{} line {line}: u is not finite", path.display())));
        }
        u.push(row.u);
        v.push(row.v);
    }
    if u.len() != q.len() {
        return Err(CliError::input(format!(
            "{}: {} rows for {} configured nodes",
            path.display(),
            u.len(),
            q.len()
        )));
    }
    let v = if v.iter().all(Option::is_some) {
        Some(v.into_iter().map(Option::unwrap).collect())
    } else if v.iter().all(Option::is_none) {
        None
    } else {
        return Err(CliError::input(format!("{}: column v is partially empty", path.display())));
    };
    Ok(StoredStates { u, v })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value).map_err(std::io::Error::other)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn read_report(path: &Path) -> CliResult<RunReport> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

pub fn measure(q: &Arc<Quadrature>, u: Vec<f64>, signed: bool, config: &ProblemConfig) -> DiscreteMeasure {
    DiscreteMeasure::new(Arc::clone(q), u, signed, config.solver.support_threshold)
}

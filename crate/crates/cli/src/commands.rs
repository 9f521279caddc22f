use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;

use ndr_core::diagnose::{convergence_study, ConvergenceRow, OracleProblem};
use ndr_core::prelude::*;

use crate::config::ProblemConfig;
use crate::error::{CliError, CliResult};
use crate::pipeline::{self, RunReport};

fn load(config: &Path, tol: Option<f64>) -> CliResult<ProblemConfig> {
    let mut c = ProblemConfig::load(config)?;
    if let Some(t) = tol {
        c.solver.tol = t;
    }
    Ok(c)
}

fn out_dir(out: &Path) -> CliResult<()> {
    fs::create_dir_all(out).map_err(|e| CliError::input(format!("{}: {e}", out.display())))
}

/// Returns whether every pass flag holds.
pub fn solve(config: &Path, out: &Path, tol: Option<f64>, seed: Option<u64>) -> CliResult<bool> {
    let config = load(config, tol)?;
    out_dir(out)?;
    let q = config.quadrature()?;
    let form = config.form(&q)?;
    let (m, report) = solve_nonnegative(&form, &config.solver);
    if report.status == SolveStatus::NotPSD {
        return Err(CliError::Solver("system matrix is not positive definite".into()));
    }
    let temporal = pipeline::temporal_solve(&config, &form, &m)?;
    let verification = pipeline::diagnostics(
        &config,
        &form,
        &m,
        report.status,
        temporal.as_ref().map(|t| (&t.form, &t.measure)),
    )?;
    let probes = pipeline::probes(&config, &m, seed.unwrap_or(0))?;
    let tol = config.tolerances();
    let excluded = q.exclusion_mask(tol.exclusion_cells, tol.real_axis_fraction);
    pipeline::write_states(&out.join(&config.outputs.states), &form, &m, temporal.as_ref(), &excluded)?;
    let run = RunReport {
        nodes: q.len(),
        solve: report,
        temporal_solve: temporal.map(|t| t.report),
        verification,
        probes,
    };
    pipeline::write_json(&out.join(&config.outputs.report), &run)?;
    Ok(passes(&run))
}

fn passes(run: &RunReport) -> bool {
    run.verification.pass_flags.all() && run.probes.as_ref().is_none_or(|p| p.pass)
}

/// Re-run the diagnostics on the stored states; writes
/// `verify_report.json`, identical to the stored report when the states
/// are untouched.
pub fn verify(config: &Path, out: &Path, tol: Option<f64>, seed: Option<u64>) -> CliResult<bool> {
    let config = load(config, tol)?;
    let q = config.quadrature()?;
    let form = config.form(&q)?;
    let stored = pipeline::read_report(&out.join(&config.outputs.report))?;
    if stored.nodes != q.len() {
        return Err(CliError::input(format!(
            "report has {} nodes, configuration gives {}",
            stored.nodes,
            q.len()
        )));
    }
    let states = pipeline::read_states(&out.join(&config.outputs.states), &q)?;
    let m = pipeline::measure(&q, states.u, false, &config);
    let temporal = match (&config.temporal_rhs, states.v) {
        (Some(rhs), Some(v)) => Some((form.with_rhs(rhs.clone())?, pipeline::measure(&q, v, true, &config))),
        (None, None) => None,
        (Some(_), None) => return Err(CliError::input("states: column v is empty but a temporal rhs is configured")),
        (None, Some(_)) => return Err(CliError::input("states: column v is set but no temporal rhs is configured")),
    };
    let verification = pipeline::diagnostics(
        &config,
        &form,
        &m,
        stored.solve.status,
        temporal.as_ref().map(|(f, m)| (f, m)),
    )?;
    let seed = seed.or(stored.probes.as_ref().map(|p| p.seed)).unwrap_or(0);
    let probes = pipeline::probes(&config, &m, seed)?;
    let run = RunReport {
        nodes: q.len(),
        solve: stored.solve,
        temporal_solve: stored.temporal_solve,
        verification,
        probes,
    };
    pipeline::write_json(&out.join("verify_report.json"), &run)?;
    Ok(passes(&run))
}

/// Writes `convergence.csv`; fails verification when the error column is
/// not monotone.
pub fn converge(config: &Path, out: &Path, tol: Option<f64>, ns: &[usize]) -> CliResult<bool> {
    let config = load(config, tol)?;
    if ns.is_empty() || ns.contains(&0) {
        return Err(CliError::input("--ns: expected positive node counts"));
    }
    if !ns.windows(2).all(|w| w[1] > w[0]) {
        return Err(CliError::input("--ns: node counts must increase"));
    }
    out_dir(out)?;
    let problem = OracleProblem {
        support: config.support.clone(),
        kernel: config.kernel,
        rhs: config.rhs.clone(),
        oracle: config.oracle.clone(),
    };
    let rows = convergence_study(&problem, ns, &config.tolerances(), &config.solver)?;
    write_convergence(&out.join("convergence.csv"), &rows)?;
    Ok(rows.windows(2).all(|w| w[1].error <= w[0].error))
}

fn write_convergence(path: &Path, rows: &[ConvergenceRow]) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
    w.write_record(["n", "error", "observed_order"])?;
    for r in rows {
        w.write_record([
            r.n.to_string(),
            format!("{:.16e}", r.error),
            r.observed_order.map(|o| format!("{o:.16e}")).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `kernel.bin` plus `nodes.csv`.
pub fn dump_kernel(config: &Path, out: &Path) -> CliResult<bool> {
    let config = load(config, None)?;
    out_dir(out)?;
    let q = config.quadrature()?;
    let form = config.form(&q)?;
    form.write_kernel_bin(BufWriter::new(File::create(out.join("kernel.bin"))?))?;
    q.write_csv(BufWriter::new(File::create(out.join("nodes.csv"))?))?;
    Ok(true)
}

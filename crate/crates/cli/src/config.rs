//! JSON problem configuration.

use std::path::Path;
use std::sync::Arc;

use ndr_core::diagnose::{Oracle, SupportHypotheses, Tolerances};
use ndr_core::geometry::Domain;
use ndr_core::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub support: SupportSpec,
    pub kernel: KernelKind,
    pub rhs: RhsKind,
    /// Second right-hand side for the signed temporal solve.
    #[serde(default)]
    pub temporal_rhs: Option<RhsKind>,
    #[serde(default = "zero_sigma")]
    pub sigma: SigmaSpec,
    pub discretization: Discretization,
    #[serde(default)]
    pub solver: SolveOptions,
    #[serde(default)]
    pub tolerances: Option<Tolerances>,
    #[serde(default)]
    pub hypotheses: Option<SupportHypotheses>,
    #[serde(default)]
    pub oracle: Option<Oracle>,
    #[serde(default)]
    pub outputs: Outputs,
}

fn zero_sigma() -> SigmaSpec {
    SigmaSpec::Zero
}

/// Output file names inside the `--out` directory.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Outputs {
    pub states: String,
    pub report: String,
}

impl Default for Outputs {
    fn default() -> Self {
        Self {
            states: "states.csv".into(),
            report: "report.json".into(),
        }
    }
}

impl ProblemConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
        let config: ProblemConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> CliResult<()> {
        self.support.validate()?;
        match self.discretization {
            Discretization::NodesPerUnit(d) | Discretization::CellSize(d) if !(d > 0.0) || !d.is_finite() => {
                return Err(CliError::input(format!("discretization: must be positive, got {d}")));
            }
            _ => {}
        }
        if !(self.solver.tol > 0.0) {
            return Err(CliError::input(format!("solver.tol: must be positive, got {}", self.solver.tol)));
        }
        if !(self.solver.support_threshold >= 0.0) {
            return Err(CliError::input("solver.support_threshold: must be nonnegative"));
        }
        match &self.sigma {
            SigmaSpec::Constant { value } if !(*value >= 0.0) => {
                return Err(CliError::input(format!("sigma.value: must be nonnegative, got {value}")));
            }
            SigmaSpec::Tabulated { values } => {
                if let Some(i) = values.iter().position(|v| !(*v >= 0.0)) {
                    return Err(CliError::input(format!("sigma.values[{i}]: must be nonnegative, got {}", values[i])));
                }
            }
            _ => {}
        }
        if let Some(t) = &self.tolerances {
            if !(t.solver_tol > 0.0 && t.residual_factor > 0.0) {
                return Err(CliError::input("tolerances: solver_tol and residual_factor must be positive"));
            }
        }
        Ok(())
    }

    pub fn tolerances(&self) -> Tolerances {
        let mut t = self.tolerances.unwrap_or_default();
        t.solver_tol = self.solver.tol;
        t
    }

    /// Hypotheses for the support checks, derived from the problem unless
    /// given explicitly.
    pub fn hypotheses(&self) -> SupportHypotheses {
        self.hypotheses.unwrap_or(SupportHypotheses {
            phi_positive_superharmonic: self.rhs.is_positive_superharmonic(),
            sigma_zero_on_boundary: self.sigma.is_zero(),
        })
    }

    pub fn quadrature(&self) -> CliResult<Arc<Quadrature>> {
        Ok(Arc::new(discretize(&self.support, self.discretization)?))
    }

    pub fn form(&self, q: &Arc<Quadrature>) -> CliResult<QuadraticForm> {
        let kernel_domain = self.kernel.domain();
        if kernel_domain != q.domain {
            return Err(CliError::input(format!(
                "kernel: {:?} does not live on a {} support",
                self.kernel,
                match q.domain {
                    Domain::KdvLine => "real-interval",
                    Domain::UpperHalfPlane => "upper half-plane",
                }
            )));
        }
        Ok(assemble_form(Arc::clone(q), self.kernel, self.rhs.clone(), &self.sigma)?)
    }
}

//! Numerical solution and verification of the nonlinear dispersion relations
//! of fNLS and KdV soliton and breather gases.
//!
//! The density of states `u ≥ 0` on a spectral support `Γ⁺` minimizes the
//! energy `∫∫ K dμ dμ + ∫ σ u² dλ - 2 ∫ φ dμ`. The crate discretizes `Γ⁺`
//! with one midpoint node per cell, assembles the energy as a dense
//! quadratic form and solves the nonnegativity-constrained problem exactly
//! by pivoting. Closed-form condensates serve as oracles.
//!
//! ```
//! use std::sync::Arc;
//! use ndr_core::prelude::*;
//!
//! let spec = SupportSpec::semicircle(Complex64::new(0.0, 0.0), 1.0);
//! let q = Arc::new(discretize_contour(&spec, 40.0).unwrap());
//! let form = assemble_form(q, KernelKind::NlsSoliton, RhsKind::NlsDensity, &SigmaSpec::Zero).unwrap();
//! let (m, report) = solve_nonnegative(&form, &SolveOptions::default());
//! assert_eq!(report.status, SolveStatus::Converged);
//! let top = m.u.len() / 2;
//! assert!((m.u[top] - 1.0 / std::f64::consts::PI).abs() < 1e-2);
//! ```

pub mod analytic;
pub mod diagnose;
pub mod error;
pub mod exec;
pub mod geometry;
pub mod kernel;
pub mod quad;
pub mod solver;

pub use error::{NdrError, Result};

pub mod prelude {
    pub use crate::analytic::{
        bound_state_density, box_condensate, gap_integral, kdv_from_nls, semicircle_condensate,
        solve_band_polynomial, BandKind, BandPolynomial, BandSystem,
    };
    pub use crate::error::{NdrError, Result};
    pub use crate::exec::Exec;
    pub use crate::geometry::{
        discretize, discretize_contour, discretize_region, outer_boundary_nodes, ComplexPoint, Discretization,
        Primitive, Quadrature, SupportSpec,
    };
    pub use crate::kernel::{
        assemble_form, assemble_form_with, green_potential_at, kernel_value, rhs_value, KernelKind,
        QuadraticForm, RhsKind, SigmaSpec,
    };
    pub use crate::solver::{
        solve_nonnegative, solve_signed, splitting_crosscheck, variational_residual, DiscreteMeasure,
        SolveOptions, SolveReport, SolveStatus, Start,
    };
    pub use num_complex::Complex64;
}

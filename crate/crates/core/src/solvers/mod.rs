//! Steady-state solvers.
//!
//! Four independent routes to the same state: the kernel of the full
//! generator, the order-by-order perturbative recurrence in `g`, the summed
//! closed forms for the built-in models, and explicit time integration.

mod closed_form;
mod evolve;
mod exact;
mod series;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::algebra::ComplexMatrix;

pub use closed_form::{
    closed_form_refrigerator, closed_form_refrigerator_with, closed_form_two_qubit, project_coefficients,
    CoefficientTable, RefrigeratorCoefficients, StateCoefficients, TwoQubitCoefficients,
};
pub use evolve::{evolve_to_steady, EvolveOptions};
pub use exact::exact_steady_state;
pub use series::{perturbative_series, truncation_error_scan, PerturbativeSeries, ScanRow, TruncationScan};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Exact,
    Perturbative { order: usize },
    ClosedForm,
    Evolved,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::Exact => f.write_str("exact"),
            Method::Perturbative { order } => write!(f, "perturbative({order})"),
            Method::ClosedForm => f.write_str("closed_form"),
            Method::Evolved => f.write_str("evolve"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverWarning {
    /// `|g² x| ≥ 1`: the perturbative series diverges even though the
    /// summed closed form is still evaluated.
    OutsideConvergence { ratio: f64 },
    TemperatureOrdering(String),
}

impl fmt::Display for SolverWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SolverWarning::OutsideConvergence { ratio } => {
                write!(f, "series ratio |g^2 x| = {ratio:.4} is outside the convergence disc")
            }
            SolverWarning::TemperatureOrdering(msg) => f.write_str(msg),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub degeneracy_margin: Option<f64>,
    /// Norm of the anti-Hermitian part removed after the last linear solve.
    pub discarded_antihermitian: f64,
    pub iterations: Option<usize>,
    pub trace_drift: Option<f64>,
    pub warnings: Vec<SolverWarning>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SteadyStateResult {
    pub rho: ComplexMatrix,
    pub method: Method,
    /// `‖L(ρ)‖_F` under the full generator.
    pub residual: f64,
    pub diagnostics: Diagnostics,
}

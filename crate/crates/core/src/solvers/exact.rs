use crate::algebra::{nullspace_density_matrix, Tolerances};
use crate::error::Result;
use crate::model::SystemModel;

use super::{Diagnostics, Method, SolverWarning, SteadyStateResult};

/// Steady state as the unit-trace kernel element of the full generator.
pub fn exact_steady_state(model: &SystemModel, tol: &Tolerances) -> Result<SteadyStateResult> {
    let l = model.liouvillian();
    let sol = nullspace_density_matrix(&l, tol)?;
    let warnings = model
        .temperature_warning()
        .map(SolverWarning::TemperatureOrdering)
        .into_iter()
        .collect();
    Ok(SteadyStateResult {
        rho: sol.rho,
        method: Method::Exact,
        residual: sol.residual,
        diagnostics: Diagnostics {
            degeneracy_margin: Some(sol.degeneracy_margin),
            discarded_antihermitian: sol.discarded,
            warnings,
            ..Diagnostics::default()
        },
    })
}

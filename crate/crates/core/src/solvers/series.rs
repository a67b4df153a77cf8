use serde::{Deserialize, Serialize};

use crate::algebra::{commutator, ComplexMatrix, Tolerances, TracelessSolver, I};
use crate::error::Result;
use crate::model::{ModelKind, SystemModel};

use super::closed_form::two_qubit_ratio;
use super::{exact_steady_state, Diagnostics, Method, SteadyStateResult};

/// Terms `ρ⁽⁰⁾ … ρ⁽ᴷ⁾` of the expansion `ρ_s = Σ gᵏ ρ⁽ᵏ⁾`.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbativeSeries {
    pub terms: Vec<ComplexMatrix>,
    pub g: f64,
    /// `|g² x|` for two qubits; `g² ‖ρ⁽³⁾‖/‖ρ⁽¹⁾‖` otherwise, when available.
    pub convergence_ratio: Option<f64>,
    pub max_discarded_antihermitian: f64,
}

impl PerturbativeSeries {
    pub fn order(&self) -> usize {
        self.terms.len() - 1
    }

    /// `Σ_{k ≤ order} gᵏ ρ⁽ᵏ⁾`.
    pub fn partial_sum(&self, order: usize) -> ComplexMatrix {
        let mut sum = self.terms[0].clone();
        let mut power = 1.0;
        for term in self.terms.iter().take(order + 1).skip(1) {
            power *= self.g;
            sum += &term.scale_real(power);
        }
        sum
    }

    /// Partial sum to the full order, scored against the generator.
    pub fn steady_state(&self, model: &SystemModel) -> SteadyStateResult {
        let rho = self.partial_sum(self.order());
        let residual = model.liouvillian().apply(&rho).frobenius_norm();
        SteadyStateResult {
            rho,
            method: Method::Perturbative { order: self.order() },
            residual,
            diagnostics: Diagnostics {
                discarded_antihermitian: self.max_discarded_antihermitian,
                ..Diagnostics::default()
            },
        }
    }
}

/// Solves `L₀(ρ⁽ᵏ⁺¹⁾) = i[X, ρ⁽ᵏ⁾]` with `tr ρ⁽ᵏ⁺¹⁾ = 0`, starting from the
/// product of local thermal states. `L₀` is the generator at `g = 0`.
pub fn perturbative_series(model: &SystemModel, max_order: usize, tol: &Tolerances) -> Result<PerturbativeSeries> {
    let solver = TracelessSolver::new(&model.free_liouvillian(), tol)?;
    let x = model.interaction();
    let mut terms = vec![model.product_thermal_state()];
    let mut max_discarded: f64 = 0.0;
    for k in 0..max_order {
        let rhs = commutator(x, &terms[k])?.scale(I);
        let next = solver.solve(&rhs)?;
        max_discarded = max_discarded.max(next.discarded);
        terms.push(next.matrix);
    }

    let g = model.coupling();
    let convergence_ratio = match model.kind() {
        ModelKind::TwoQubit => Some((g * g * two_qubit_ratio(model)).abs()),
        _ if terms.len() > 3 && terms[1].frobenius_norm() > 0.0 => {
            Some(g * g * terms[3].frobenius_norm() / terms[1].frobenius_norm())
        }
        _ => None,
    };
    Ok(PerturbativeSeries { terms, g, convergence_ratio, max_discarded_antihermitian: max_discarded })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub g: f64,
    /// `‖ρ_exact − Σ_{k≤K} gᵏ ρ⁽ᵏ⁾‖_F`.
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruncationScan {
    pub order: usize,
    pub rows: Vec<ScanRow>,
    /// Least-squares slope of `ln error` against `ln g` over rows with
    /// positive `g` and error; `None` with fewer than two such rows.
    pub slope: Option<f64>,
}

pub fn truncation_error_scan(
    model: &SystemModel,
    order: usize,
    couplings: &[f64],
    tol: &Tolerances,
) -> Result<TruncationScan> {
    // The series terms do not depend on g, only the partial sums do.
    let series = perturbative_series(&model.with_coupling(0.0)?, order, tol)?;
    let mut rows = Vec::with_capacity(couplings.len());
    for &g in couplings {
        let at_g = model.with_coupling(g)?;
        let exact = exact_steady_state(&at_g, tol)?;
        let partial = PerturbativeSeries { g, ..series.clone() }.partial_sum(order);
        rows.push(ScanRow { g, error: exact.rho.distance(&partial) });
    }
    let slope = loglog_slope(&rows);
    Ok(TruncationScan { order, rows, slope })
}

fn loglog_slope(rows: &[ScanRow]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.g > 0.0 && r.error > 0.0)
        .map(|r| (r.g.ln(), r.error.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

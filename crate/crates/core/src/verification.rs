//! Self-test suite: cross-solver agreement, series structure and the
//! thermodynamic laws on fixed grids and seeded random draws.

use serde::{Deserialize, Serialize};

use crate::algebra::{ComplexMatrix, Tolerances};
use crate::error::Result;
use crate::model::{build_refrigerator, build_two_qubit, ModelKind, QubitSpec, SystemModel};
use crate::sampling::{find_second_law_violation, ParameterBox, ViolationPoint};
use crate::solvers::{
    closed_form_refrigerator_with, closed_form_two_qubit, evolve_to_steady, exact_steady_state, perturbative_series,
    project_coefficients, truncation_error_scan, CoefficientTable, EvolveOptions,
};
use crate::thermo::{audit_state, heat_currents, interaction_currents, HeatHamiltonian, ThermoOptions};

fn qubit(e: f64, beta: f64, p: f64) -> QubitSpec {
    QubitSpec::new(e, beta, p).expect("fixed parameters are valid")
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

/// Two-qubit reference point: E = (1, 1), β = (1, 0.5), p = (0.1, 0.1).
pub fn default_two_qubit(g: f64) -> SystemModel {
    build_two_qubit(qubit(1.0, 1.0, 0.1), qubit(1.0, 0.5, 0.1), g).expect("valid")
}

/// Resonant refrigerator: E = (1, 2, 1), T = (1, 2, 10), p = 0.1 each.
pub fn default_refrigerator(g: f64) -> SystemModel {
    build_refrigerator(qubit(1.0, 1.0, 0.1), qubit(2.0, 0.5, 0.1), qubit(1.0, 0.1, 0.1), g).expect("valid")
}

/// 5×5×5 grid over ΔE ∈ [−1, 1], β₂ ∈ [0.1, 2], g ∈ [0.001, 0.2] with
/// E₁ = β₁ = 1 and p₁ = p₂ = 0.1. ΔE takes the five cell centres of
/// [−1, 1] so that E₂ = 1 − ΔE stays positive and ΔE = 0 is included.
pub fn two_qubit_grid() -> Vec<SystemModel> {
    let detunings: Vec<f64> = (0..5).map(|i| -1.0 + 0.4 * (i as f64 + 0.5)).collect();
    let mut out = Vec::with_capacity(125);
    for &de in &detunings {
        for &beta2 in &linspace(0.1, 2.0, 5) {
            for &g in &linspace(0.001, 0.2, 5) {
                let e2 = if de == 0.0 { 1.0 } else { 1.0 - de };
                out.push(build_two_qubit(qubit(1.0, 1.0, 0.1), qubit(e2, beta2, 0.1), g).expect("valid"));
            }
        }
    }
    out
}

pub fn refrigerator_points() -> Vec<SystemModel> {
    [0.01, 0.05].iter().map(|&g| default_refrigerator(g)).collect()
}

/// Models for the truncation-order scan. Rates are large enough that the
/// series converges over the whole coupling range `g ≤ 0.2`.
pub fn scan_models() -> Vec<SystemModel> {
    vec![
        build_two_qubit(qubit(1.0, 1.0, 1.0), qubit(0.8, 0.5, 1.0), 0.0).expect("valid"),
        build_refrigerator(qubit(1.0, 1.0, 1.0), qubit(2.0, 0.5, 1.0), qubit(1.0, 0.1, 1.0), 0.0).expect("valid"),
    ]
}

pub const SCAN_COUPLINGS: [f64; 4] = [0.2, 0.1, 0.05, 0.025];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyOptions {
    pub seed: u64,
    pub resonant_draws: usize,
    pub violation_draws: usize,
    pub tol: Tolerances,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self { seed: 2018, resonant_draws: 1000, violation_draws: 2000, tol: Tolerances::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// Deviation of one refrigerator coefficient from its exact projection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientDeviation {
    pub g: f64,
    pub table: CoefficientTable,
    pub coefficient: String,
    pub closed_form: f64,
    pub exact: f64,
    pub deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub checks: Vec<CheckOutcome>,
    pub coefficient_deviations: Vec<CoefficientDeviation>,
    pub violation: Option<ViolationPoint>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

fn outcome(name: &str, passed: bool, detail: String) -> CheckOutcome {
    CheckOutcome { name: name.to_string(), passed, detail }
}

fn max_of(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(0.0, f64::max)
}

pub fn run(opts: &VerifyOptions) -> Result<VerificationReport> {
    let tol = &opts.tol;
    let thermo = ThermoOptions::default();
    let mut checks = Vec::new();

    // Cross-solver agreement and current formulas on the two-qubit grid.
    let mut worst_state: f64 = 0.0;
    let mut worst_current: f64 = 0.0;
    let mut worst_first_law: f64 = 0.0;
    let mut worst_g_law: f64 = 0.0;
    let mut worst_g_resonant: f64 = 0.0;
    for model in two_qubit_grid() {
        let exact = exact_steady_state(&model, tol)?;
        let (closed, c) = closed_form_two_qubit(&model, tol)?;
        if c.convergence_ratio < 1.0 {
            worst_state = worst_state.max(exact.rho.distance(&closed.rho));
        }
        let g = model.coupling();
        let heat = heat_currents(&model, &closed.rho, HeatHamiltonian::Full);
        let inter = interaction_currents(&model, &closed.rho);
        for i in 0..2 {
            let sign = if i == 0 { -1.0 } else { 1.0 };
            let q = model.qubit(i);
            let formula = 2.0 * g * c.d * (sign * q.energy() + q.rate() / c.q * c.detuning);
            let formula_g = 2.0 * g * c.d * sign * q.energy();
            worst_current = worst_current.max((heat[i] - formula).abs()).max((inter[i] - formula_g).abs());
        }
        let report = audit_state(&model, &exact.rho, &thermo)?;
        worst_first_law = worst_first_law.max(report.first_law_residual);
        if c.detuning == 0.0 {
            worst_g_resonant = worst_g_resonant.max(report.first_law_g_residual);
        } else {
            let d = project_coefficients(&model, &exact.rho).expect("built-in model").d;
            let expected_g = (2.0 * g * d * c.detuning).abs();
            worst_g_law = worst_g_law.max((report.first_law_g_residual - expected_g).abs());
        }
    }
    checks.push(outcome(
        "two_qubit_cross_solver",
        worst_state <= 1e-10,
        format!("max ‖ρ_closed − ρ_exact‖_F = {worst_state:.3e} (limit 1e-10)"),
    ));
    checks.push(outcome(
        "two_qubit_current_formulas",
        worst_current <= 1e-10,
        format!("max current deviation = {worst_current:.3e} (limit 1e-10)"),
    ));

    // Refrigerator cross-check, localized per coefficient.
    let mut coefficient_deviations = Vec::new();
    let mut worst_fridge: f64 = 0.0;
    for model in refrigerator_points() {
        let exact = exact_steady_state(&model, tol)?;
        let measured = project_coefficients(&model, &exact.rho).expect("built-in model");
        for table in [CoefficientTable::Derived, CoefficientTable::Published] {
            let (closed, c) = closed_form_refrigerator_with(&model, table, tol)?;
            if table == CoefficientTable::Derived {
                worst_fridge = worst_fridge.max(exact.rho.distance(&closed.rho));
            }
            for ((name, value), (_, truth)) in c.state_coefficients().named().into_iter().zip(measured.named()) {
                coefficient_deviations.push(CoefficientDeviation {
                    g: model.coupling(),
                    table,
                    coefficient: name,
                    closed_form: value,
                    exact: truth,
                    deviation: (value - truth).abs(),
                });
            }
        }
        let report = audit_state(&model, &exact.rho, &thermo)?;
        worst_first_law = worst_first_law.max(report.first_law_residual);
        worst_g_resonant = worst_g_resonant.max(report.first_law_g_residual);
    }
    let offenders: Vec<String> = coefficient_deviations
        .iter()
        .filter(|d| d.table == CoefficientTable::Derived && d.deviation > 1e-8)
        .map(|d| format!("{}@g={}", d.coefficient, d.g))
        .collect();
    checks.push(outcome(
        "refrigerator_cross_solver",
        worst_fridge <= 1e-8 && offenders.is_empty(),
        format!("max ‖ρ_closed − ρ_exact‖_F = {worst_fridge:.3e} (limit 1e-8); deviating coefficients: {offenders:?}"),
    ));
    checks.push(outcome(
        "first_law",
        worst_first_law <= 1e-12 && worst_g_resonant <= 1e-12 && worst_g_law <= 1e-10,
        format!(
            "max |ΣQ_i| = {worst_first_law:.3e} (limit 1e-12); resonant max |ΣQ_i^g| = {worst_g_resonant:.3e} (limit 1e-12); \
             detuned max ||ΣQ_i^g| − |2gdΔE|| = {worst_g_law:.3e} (limit 1e-10)"
        ),
    ));

    // Truncation order of the partial sums.
    let mut slopes = Vec::new();
    let mut scaling_ok = true;
    for model in scan_models() {
        for order in 1..=3 {
            let scan = truncation_error_scan(&model, order, &SCAN_COUPLINGS, tol)?;
            let slope = scan.slope.unwrap_or(f64::NAN);
            scaling_ok &= slope >= order as f64 + 1.0 - 0.2;
            slopes.push(format!("{}:K={order}:{slope:.3}", model.kind().as_str()));
        }
    }
    checks.push(outcome("truncation_scaling", scaling_ok, format!("slopes {}", slopes.join(", "))));

    // Geometric ratio between first and third order.
    let bounds = ParameterBox::default();
    let mut worst_ratio: f64 = 0.0;
    for model in bounds.models(ModelKind::TwoQubit, opts.seed, 20) {
        let series = perturbative_series(&model, 3, tol)?;
        let (_, c) = closed_form_two_qubit(&model, tol)?;
        worst_ratio = worst_ratio.max(max_abs_diff(&series.terms[3], &series.terms[1].scale_real(c.x)));
    }
    checks.push(outcome(
        "geometric_ratio",
        worst_ratio <= 1e-10,
        format!("max componentwise |ρ⁽³⁾ − xρ⁽¹⁾| = {worst_ratio:.3e} (limit 1e-10)"),
    ));

    // Second law at resonance.
    let mut min_rate = f64::INFINITY;
    for kind in [ModelKind::TwoQubit, ModelKind::Refrigerator] {
        for model in bounds.resonant_models(kind, opts.seed, opts.resonant_draws) {
            let exact = exact_steady_state(&model, tol)?;
            min_rate = min_rate.min(audit_state(&model, &exact.rho, &thermo)?.entropy_rate);
        }
    }
    checks.push(outcome(
        "second_law_at_resonance",
        min_rate >= -1e-12,
        format!("min entropy production over {} draws per model = {min_rate:.3e}", opts.resonant_draws),
    ));

    // Second-law violation off resonance.
    let violation = find_second_law_violation(&bounds, opts.seed, opts.violation_draws, 1e-6, tol)?;
    checks.push(outcome(
        "second_law_violation_detuned",
        violation.is_some(),
        match &violation {
            Some(v) => format!(
                "found at draw {}: E=({}, {}), β=({}, {}), p=({}, {}), g={}, dS/dt={:.3e}",
                v.index,
                v.q1.energy(),
                v.q2.energy(),
                v.q1.beta(),
                v.q2.beta(),
                v.q1.rate(),
                v.q2.rate(),
                v.g,
                v.entropy_rate
            ),
            None => "no violating point found".to_string(),
        },
    ));

    // Time integration as an independent oracle.
    let mut worst_dyn: f64 = 0.0;
    for model in [default_two_qubit(0.05), default_refrigerator(0.05)] {
        let exact = exact_steady_state(&model, tol)?;
        let dim = model.hilbert_dim();
        let start = ComplexMatrix::identity(dim).scale_real(1.0 / dim as f64);
        let evolved = evolve_to_steady(&model, &start, &EvolveOptions::for_model(&model))?;
        worst_dyn = worst_dyn.max(evolved.rho.distance(&exact.rho));
    }
    checks.push(outcome(
        "dynamics_oracle",
        worst_dyn <= 1e-6,
        format!("max ‖ρ(t) − ρ_exact‖_F = {worst_dyn:.3e} (limit 1e-6)"),
    ));

    // The sign of the cold-bath current must follow the cooling window.
    let mut indicator = Vec::new();
    let mut indicator_ok = true;
    for model in refrigerator_points() {
        let exact = exact_steady_state(&model, tol)?;
        let q1_current = audit_state(&model, &exact.rho, &thermo)?.heat[0];
        let q = model.qubits();
        let window = q[1].beta() * q[1].energy() > q[0].beta() * q[0].energy() + q[2].beta() * q[2].energy();
        indicator_ok &= (q1_current > 0.0) == window;
        indicator.push(format!("g={}: Q1={q1_current:.6e}, cooling window {window}", model.coupling()));
    }
    checks.push(outcome("refrigeration_indicator", indicator_ok, indicator.join("; ")));

    Ok(VerificationReport { checks, coefficient_deviations, violation })
}

fn max_abs_diff(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    let dim = a.dim();
    max_of((0..dim).flat_map(|r| (0..dim).map(move |c| (r, c))).map(|(r, c)| (a.get(r, c) - b.get(r, c)).norm()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_has_positive_energies_and_includes_resonance() {
        let grid = two_qubit_grid();
        assert_eq!(grid.len(), 125);
        assert!(grid.iter().any(|m| m.detuning() == Some(0.0)));
        let detunings: Vec<f64> = grid.iter().map(|m| m.detuning().unwrap()).collect();
        assert!(detunings.iter().all(|d| d.abs() <= 0.8 + 1e-12));
    }
}

//! Heat currents and the first/second-law audit.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::algebra::{commutator, ComplexMatrix, Tolerances, I};
use crate::error::{Error, Result};
use crate::model::{ModelKind, QubitSpec, SystemModel};
use crate::solvers::exact_steady_state;

/// Hamiltonian weighting the bath currents `Q_i = tr[H D_i(ρ)]`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeatHamiltonian {
    /// `H⁽⁰⁾ + gX`.
    #[default]
    Full,
    /// `H⁽⁰⁾` only.
    Free,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThermoOptions {
    pub hamiltonian: HeatHamiltonian,
    /// Largest `|Σ Q_i|` still counted as energy conservation.
    pub first_law_tol: f64,
    /// Entropy production above `−second_law_slack` counts as nonnegative.
    pub second_law_slack: f64,
}

impl Default for ThermoOptions {
    fn default() -> Self {
        Self { hamiltonian: HeatHamiltonian::Full, first_law_tol: 1e-10, second_law_slack: 1e-12 }
    }
}

/// Energy flow from each bath into the system.
pub fn heat_currents(model: &SystemModel, rho: &ComplexMatrix, which: HeatHamiltonian) -> Vec<f64> {
    let h = match which {
        HeatHamiltonian::Full => model.hamiltonian(),
        HeatHamiltonian::Free => model.free_hamiltonian(),
    };
    model
        .dissipators()
        .iter()
        .map(|d| (&h * &d.apply(rho)).trace().re)
        .collect()
}

/// Rate of change of each local energy caused by the interaction,
/// `Q_i^g = i tr{H_i [H_int, ρ]}`.
pub fn interaction_currents(model: &SystemModel, rho: &ComplexMatrix) -> Vec<f64> {
    let driven = commutator(&model.interaction_hamiltonian(), rho).expect("state matches model");
    (0..model.n_qubits())
        .map(|i| (&model.local_hamiltonian(i) * &driven).trace() * I)
        .map(|z| z.re)
        .collect()
}

/// `dS/dt = −Σ Q_i / T_i`.
pub fn entropy_production(currents: &[f64], temperatures: &[f64]) -> Result<f64> {
    if currents.len() != temperatures.len() {
        return Err(Error::DimensionMismatch { left: currents.len(), right: temperatures.len() });
    }
    if let Some(&t) = temperatures.iter().find(|&&t| !(t > 0.0)) {
        return Err(Error::NonPositiveTemperature(t));
    }
    Ok(-currents.iter().zip(temperatures).map(|(q, t)| q / t).sum::<f64>())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Consistent,
    SecondLawViolation,
    FirstLawViolation,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Consistent => "consistent",
            Verdict::SecondLawViolation => "second-law violation",
            Verdict::FirstLawViolation => "first-law violation",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThermoReport {
    pub model: ModelKind,
    pub coupling: f64,
    pub detuning: Option<f64>,
    pub temperatures: Vec<f64>,
    pub heat: Vec<f64>,
    pub interaction: Vec<f64>,
    pub entropy_rate: f64,
    pub first_law_residual: f64,
    pub first_law_g_residual: f64,
    pub first_law_ok: bool,
    pub second_law_ok: bool,
    pub verdict: Verdict,
    /// Refrigerator only: heat drawn from the coldest bath is positive.
    pub cooling: Option<bool>,
}

/// Currents and law checks for a given state of `model`.
pub fn audit_state(model: &SystemModel, rho: &ComplexMatrix, opts: &ThermoOptions) -> Result<ThermoReport> {
    let heat = heat_currents(model, rho, opts.hamiltonian);
    let interaction = interaction_currents(model, rho);
    let temperatures: Vec<f64> = model.qubits().iter().map(QubitSpec::temperature).collect();
    let entropy_rate = entropy_production(&heat, &temperatures)?;
    let first_law_residual = heat.iter().sum::<f64>().abs();
    let first_law_g_residual = interaction.iter().sum::<f64>().abs();
    let first_law_ok = first_law_residual <= opts.first_law_tol;
    let second_law_ok = entropy_rate >= -opts.second_law_slack;
    let verdict = if !first_law_ok {
        Verdict::FirstLawViolation
    } else if !second_law_ok {
        Verdict::SecondLawViolation
    } else {
        Verdict::Consistent
    };
    let cooling = (model.kind() == ModelKind::Refrigerator).then(|| heat[0] > 0.0);
    Ok(ThermoReport {
        model: model.kind(),
        coupling: model.coupling(),
        detuning: model.detuning(),
        temperatures,
        heat,
        interaction,
        entropy_rate,
        first_law_residual,
        first_law_g_residual,
        first_law_ok,
        second_law_ok,
        verdict,
        cooling,
    })
}

/// Solves the exact steady state and audits it.
pub fn consistency_audit(model: &SystemModel, opts: &ThermoOptions, tol: &Tolerances) -> Result<ThermoReport> {
    let state = exact_steady_state(model, tol)?;
    audit_state(model, &state.rho, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::build_two_qubit;

    fn spec(e: f64, beta: f64, p: f64) -> QubitSpec {
        QubitSpec::new(e, beta, p).unwrap()
    }

    #[test]
    fn equilibrium_has_no_currents() {
        let q = spec(1.0, 0.8, 0.1);
        let model = build_two_qubit(q, q, 0.1).unwrap();
        let report = consistency_audit(&model, &ThermoOptions::default(), &Tolerances::default()).unwrap();
        for v in report.heat.iter().chain(&report.interaction) {
            assert!(v.abs() < 1e-14);
        }
        assert!(report.entropy_rate.abs() < 1e-13);
    }

    #[test]
    fn zero_coupling_has_no_interaction_currents() {
        let model = build_two_qubit(spec(1.0, 1.0, 0.1), spec(0.5, 0.3, 0.2), 0.0).unwrap();
        let report = consistency_audit(&model, &ThermoOptions::default(), &Tolerances::default()).unwrap();
        assert!(report.interaction.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn entropy_production_checks_inputs() {
        assert_eq!(entropy_production(&[0.0, 0.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert!((entropy_production(&[1.0, -1.0], &[2.0, 1.0]).unwrap() - 0.5).abs() < 1e-15);
        assert!(matches!(entropy_production(&[1.0], &[0.0]), Err(Error::NonPositiveTemperature(_))));
        assert!(entropy_production(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn resonant_heat_flows_hot_to_cold() {
        let model = build_two_qubit(spec(1.0, 1.0, 0.1), spec(1.0, 0.5, 0.1), 0.05).unwrap();
        let report = consistency_audit(&model, &ThermoOptions::default(), &Tolerances::default()).unwrap();
        // Bath 2 is hotter: it feeds energy in, bath 1 absorbs it.
        assert!(report.heat[1] > 0.0 && report.heat[0] < 0.0);
        assert!(report.entropy_rate > 0.0);
        assert_eq!(report.verdict, Verdict::Consistent);
        assert_eq!(report.cooling, None);
    }

    #[test]
    fn free_hamiltonian_variant_differs_at_second_order() {
        let model = build_two_qubit(spec(1.0, 1.0, 0.1), spec(0.7, 0.5, 0.1), 0.05).unwrap();
        let rho = exact_steady_state(&model, &Tolerances::default()).unwrap().rho;
        let full = heat_currents(&model, &rho, HeatHamiltonian::Full);
        let free = heat_currents(&model, &rho, HeatHamiltonian::Free);
        assert!(full.iter().sum::<f64>().abs() < 1e-15);
        assert!(free.iter().sum::<f64>().abs() > 1e-6);
    }
}

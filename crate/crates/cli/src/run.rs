use lme::algebra::ComplexMatrix;
use lme::model::{ModelKind, SystemModel};
use lme::solvers::{
    closed_form_refrigerator_with, closed_form_two_qubit, evolve_to_steady, exact_steady_state, perturbative_series,
    project_coefficients, EvolveOptions, Method, StateCoefficients, SteadyStateResult,
};
use lme::thermo::{audit_state, ThermoReport};
use rayon::prelude::*;
use serde::Serialize;

use crate::scenario::{MethodName, Point, Scenario};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Choice {
    Exact,
    Perturbative(usize),
    ClosedForm,
    Evolve,
}

pub fn choices(scenario: &Scenario) -> Vec<Choice> {
    let k = scenario.order;
    match scenario.method {
        MethodName::Exact => vec![Choice::Exact],
        MethodName::Perturbative => vec![Choice::Perturbative(k)],
        MethodName::ClosedForm => vec![Choice::ClosedForm],
        MethodName::Evolve => vec![Choice::Evolve],
        MethodName::All if scenario.kind == ModelKind::Custom => {
            vec![Choice::Exact, Choice::Perturbative(k), Choice::Evolve]
        }
        MethodName::All => vec![Choice::Exact, Choice::Perturbative(k), Choice::ClosedForm, Choice::Evolve],
    }
}

pub struct Evaluation {
    pub state: SteadyStateResult,
    pub coefficients: Option<StateCoefficients>,
    pub convergence_ratio: Option<f64>,
    pub report: ThermoReport,
}

pub fn evaluate(scenario: &Scenario, model: &SystemModel, choice: Choice) -> lme::Result<Evaluation> {
    let tol = &scenario.tol;
    let (state, convergence_ratio) = match choice {
        Choice::Exact => (exact_steady_state(model, tol)?, None),
        Choice::Perturbative(k) => {
            let series = perturbative_series(model, k, tol)?;
            (series.steady_state(model), series.convergence_ratio)
        }
        Choice::ClosedForm => match model.kind() {
            ModelKind::TwoQubit => {
                let (state, c) = closed_form_two_qubit(model, tol)?;
                (state, Some(c.convergence_ratio))
            }
            _ => {
                let (state, c) = closed_form_refrigerator_with(model, scenario.table, tol)?;
                (state, Some(c.convergence_ratio))
            }
        },
        Choice::Evolve => {
            let dim = model.hilbert_dim();
            let start = ComplexMatrix::identity(dim).scale_real(1.0 / dim as f64);
            // |ΣQ_i| tracks the generator residual; stopping two decades below
            // the residual target keeps it inside the first-law tolerance.
            let opts = EvolveOptions { tol: scenario.tol.residual * 1e-2, ..EvolveOptions::for_model(model) };
            (evolve_to_steady(model, &start, &opts)?, None)
        }
    };
    let report = audit_state(model, &state.rho, &scenario.thermo)?;
    let coefficients = project_coefficients(model, &state.rho);
    Ok(Evaluation { state, coefficients, convergence_ratio, report })
}

#[derive(Debug)]
pub struct SolverFailure {
    pub point: usize,
    pub description: String,
    pub method: String,
    pub error: lme::Error,
}

impl std::fmt::Display for SolverFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "solver failure at point {} ({}) with method {}: {}", self.point, self.description, self.method, self.error)
    }
}

fn method_label(choice: Choice) -> String {
    match choice {
        Choice::Exact => Method::Exact.to_string(),
        Choice::Perturbative(order) => Method::Perturbative { order }.to_string(),
        Choice::ClosedForm => Method::ClosedForm.to_string(),
        Choice::Evolve => Method::Evolved.to_string(),
    }
}

pub struct Evaluated {
    pub point: usize,
    pub params: Point,
    pub model: SystemModel,
    pub method: String,
    pub eval: Evaluation,
}

/// Evaluates every (point, method) pair in parallel; results come back in
/// sweep order, and the first failure in that order is reported.
pub fn evaluate_all(scenario: &Scenario, points: &[Point]) -> Result<Vec<Evaluated>, SolverFailure> {
    let methods = choices(scenario);
    let tasks: Vec<(usize, Choice)> =
        (0..points.len()).flat_map(|i| methods.iter().map(move |&c| (i, c))).collect();
    tasks
        .par_iter()
        .map(|&(i, choice)| {
            let fail = |error| SolverFailure {
                point: i,
                description: points[i].describe(),
                method: method_label(choice),
                error,
            };
            let model = scenario.model(&points[i]).map_err(fail)?;
            let eval = evaluate(scenario, &model, choice).map_err(fail)?;
            Ok(Evaluated { point: i, params: points[i].clone(), model, method: method_label(choice), eval })
        })
        .collect::<Vec<_>>()
        .into_iter()
        .collect()
}

/// Fixed output columns, schema version 1.
#[derive(Debug, Clone, Serialize)]
pub struct Row {
    pub schema_version: u32,
    pub point: usize,
    pub method: String,
    pub model: &'static str,
    pub g: f64,
    #[serde(rename = "E1")]
    pub e1: Option<f64>,
    #[serde(rename = "E2")]
    pub e2: Option<f64>,
    #[serde(rename = "E3")]
    pub e3: Option<f64>,
    pub beta1: Option<f64>,
    pub beta2: Option<f64>,
    pub beta3: Option<f64>,
    #[serde(rename = "T1")]
    pub t1: Option<f64>,
    #[serde(rename = "T2")]
    pub t2: Option<f64>,
    #[serde(rename = "T3")]
    pub t3: Option<f64>,
    pub p1: Option<f64>,
    pub p2: Option<f64>,
    pub p3: Option<f64>,
    pub detuning: Option<f64>,
    pub d: Option<f64>,
    pub m: Option<f64>,
    pub a1: Option<f64>,
    pub a2: Option<f64>,
    pub a3: Option<f64>,
    pub b12: Option<f64>,
    pub b23: Option<f64>,
    pub b31: Option<f64>,
    pub c: Option<f64>,
    #[serde(rename = "Q1")]
    pub q1: Option<f64>,
    #[serde(rename = "Q2")]
    pub q2: Option<f64>,
    #[serde(rename = "Q3")]
    pub q3: Option<f64>,
    #[serde(rename = "Qg1")]
    pub qg1: Option<f64>,
    #[serde(rename = "Qg2")]
    pub qg2: Option<f64>,
    #[serde(rename = "Qg3")]
    pub qg3: Option<f64>,
    pub entropy_rate: f64,
    pub first_law_ok: bool,
    pub second_law_ok: bool,
    pub cooling: Option<bool>,
    pub verdict: String,
    pub first_law_residual: f64,
    pub first_law_g_residual: f64,
    pub residual: f64,
    pub degeneracy_margin: Option<f64>,
    pub discarded_antihermitian: f64,
    pub convergence_ratio: Option<f64>,
    pub warnings: String,
}

impl Row {
    pub fn new(e: &Evaluated) -> Self {
        let q = &e.params.qubits;
        let qf = |i: usize, f: fn(&crate::scenario::QubitParams) -> f64| q.get(i).map(f);
        let coeffs = e.eval.coefficients.as_ref();
        let b = |i: usize| coeffs.and_then(|c| c.b.get(i).copied());
        let a = |i: usize| coeffs.and_then(|c| c.a.get(i).copied());
        let r = &e.eval.report;
        let d = &e.eval.state.diagnostics;
        Row {
            schema_version: SCHEMA_VERSION,
            point: e.point,
            method: e.method.clone(),
            model: e.model.kind().as_str(),
            g: e.params.g,
            e1: qf(0, |q| q.energy),
            e2: qf(1, |q| q.energy),
            e3: qf(2, |q| q.energy),
            beta1: qf(0, |q| q.beta),
            beta2: qf(1, |q| q.beta),
            beta3: qf(2, |q| q.beta),
            t1: qf(0, |q| 1.0 / q.beta),
            t2: qf(1, |q| 1.0 / q.beta),
            t3: qf(2, |q| 1.0 / q.beta),
            p1: qf(0, |q| q.rate),
            p2: qf(1, |q| q.rate),
            p3: qf(2, |q| q.rate),
            detuning: e.model.detuning(),
            d: coeffs.map(|c| c.d),
            m: coeffs.map(|c| c.m),
            a1: a(0),
            a2: a(1),
            a3: a(2),
            b12: b(0),
            b23: b(1),
            b31: b(2),
            c: coeffs.and_then(|c| c.c),
            q1: r.heat.first().copied(),
            q2: r.heat.get(1).copied(),
            q3: r.heat.get(2).copied(),
            qg1: r.interaction.first().copied(),
            qg2: r.interaction.get(1).copied(),
            qg3: r.interaction.get(2).copied(),
            entropy_rate: r.entropy_rate,
            first_law_ok: r.first_law_ok,
            second_law_ok: r.second_law_ok,
            cooling: r.cooling,
            verdict: r.verdict.to_string(),
            first_law_residual: r.first_law_residual,
            first_law_g_residual: r.first_law_g_residual,
            residual: e.eval.state.residual,
            degeneracy_margin: d.degeneracy_margin,
            discarded_antihermitian: d.discarded_antihermitian,
            convergence_ratio: e.eval.convergence_ratio,
            warnings: d.warnings.iter().map(|w| w.to_string()).collect::<Vec<_>>().join("; "),
        }
    }
}

/// Pairwise Frobenius distances between the states of one point.
pub struct Agreement {
    pub methods: Vec<String>,
    pub distances: Vec<Vec<f64>>,
}

pub fn agreement(results: &[Evaluated]) -> Agreement {
    let methods = results.iter().map(|r| r.method.clone()).collect();
    let distances = results
        .iter()
        .map(|a| results.iter().map(|b| a.eval.state.rho.distance(&b.eval.state.rho)).collect())
        .collect();
    Agreement { methods, distances }
}

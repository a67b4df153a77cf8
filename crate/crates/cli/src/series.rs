use lme::model::ModelKind;
use lme::solvers::{closed_form_refrigerator, closed_form_two_qubit, perturbative_series, truncation_error_scan};
use serde::Serialize;

use crate::scenario::{Param, Scenario};

pub const DEFAULT_COUPLINGS: [f64; 4] = [0.2, 0.1, 0.05, 0.025];

#[derive(Debug, Serialize)]
pub struct TermRow {
    pub order: usize,
    pub frobenius_norm: f64,
    /// Least-squares scalar r with ρ⁽ᵏ⁾ ≈ r ρ⁽ᵏ⁻²⁾.
    pub ratio_to_k_minus_2: Option<f64>,
    /// Largest entry of ρ⁽ᵏ⁾ − r ρ⁽ᵏ⁻²⁾.
    pub ratio_spread: Option<f64>,
}

/// Entrywise ρ⁽³⁾/ρ⁽¹⁾ over the nonzero entries of ρ⁽¹⁾.
#[derive(Debug, Serialize)]
pub struct RatioRow {
    pub row: usize,
    pub col: usize,
    pub rho1_re: f64,
    pub rho1_im: f64,
    pub rho3_re: f64,
    pub rho3_im: f64,
    pub ratio_re: f64,
    pub ratio_im: f64,
}

#[derive(Debug, Serialize)]
pub struct TruncationRow {
    pub order: usize,
    pub g: f64,
    pub error: f64,
}

#[derive(Debug, Serialize)]
pub struct SlopeRow {
    pub order: usize,
    pub slope: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct SeriesReport {
    pub schema_version: u32,
    pub model: &'static str,
    pub g: f64,
    /// Closed-form ratio x for the built-in models.
    pub x: Option<f64>,
    pub convergence_ratio: Option<f64>,
    pub terms: Vec<TermRow>,
    pub ratio: Vec<RatioRow>,
    pub truncation: Vec<TruncationRow>,
    pub slopes: Vec<SlopeRow>,
}

pub fn couplings(scenario: &Scenario) -> Vec<f64> {
    scenario
        .sweep
        .as_ref()
        .and_then(|s| s.axes.iter().find(|a| a.param == Param::Coupling))
        .map(|a| a.values.clone())
        .unwrap_or_else(|| DEFAULT_COUPLINGS.to_vec())
}

pub fn run(scenario: &Scenario) -> lme::Result<SeriesReport> {
    let tol = &scenario.tol;
    let model = scenario.model(&scenario.base)?;
    let order = scenario.order.max(3);
    let series = perturbative_series(&model, order, tol)?;

    let terms = series
        .terms
        .iter()
        .enumerate()
        .map(|(k, term)| {
            let (ratio, spread) = if k >= 2 {
                let prev = &series.terms[k - 2];
                let norm2 = prev.frobenius_norm().powi(2);
                if norm2 > 0.0 {
                    let r = prev.inner(term).re / norm2;
                    (Some(r), Some((term - &prev.scale_real(r)).max_abs()))
                } else {
                    (None, None)
                }
            } else {
                (None, None)
            };
            TermRow { order: k, frobenius_norm: term.frobenius_norm(), ratio_to_k_minus_2: ratio, ratio_spread: spread }
        })
        .collect();

    let (rho1, rho3) = (&series.terms[1], &series.terms[3]);
    let floor = 1e-12 * rho1.max_abs();
    let dim = rho1.dim();
    let mut ratio = Vec::new();
    for row in 0..dim {
        for col in 0..dim {
            let (a, b) = (rho1.get(row, col), rho3.get(row, col));
            if a.norm() > floor && a.norm() > 0.0 {
                let r = b / a;
                ratio.push(RatioRow {
                    row,
                    col,
                    rho1_re: a.re,
                    rho1_im: a.im,
                    rho3_re: b.re,
                    rho3_im: b.im,
                    ratio_re: r.re,
                    ratio_im: r.im,
                });
            }
        }
    }

    let x = match model.kind() {
        ModelKind::TwoQubit => Some(closed_form_two_qubit(&model, tol)?.1.x),
        ModelKind::Refrigerator => Some(closed_form_refrigerator(&model, tol)?.1.x),
        ModelKind::Custom => None,
    };

    let gs = couplings(scenario);
    let mut truncation = Vec::new();
    let mut slopes = Vec::new();
    for k in 1..=scenario.order.max(1) {
        let scan = truncation_error_scan(&model, k, &gs, tol)?;
        truncation.extend(scan.rows.iter().map(|r| TruncationRow { order: k, g: r.g, error: r.error }));
        slopes.push(SlopeRow { order: k, slope: scan.slope });
    }

    Ok(SeriesReport {
        schema_version: crate::run::SCHEMA_VERSION,
        model: model.kind().as_str(),
        g: model.coupling(),
        x,
        convergence_ratio: series.convergence_ratio,
        terms,
        ratio,
        truncation,
        slopes,
    })
}

//! Summed perturbation series for the two built-in models.
//!
//! Odd orders of the series live in span{X, Y} and even orders are
//! diagonal; each pair of orders is the previous pair times a fixed ratio
//! `x`, so the series sums to a rational function of `g`.

use serde::{Deserialize, Serialize};

use crate::algebra::{ComplexMatrix, Tolerances};
use crate::error::{Error, Result};
use crate::model::{pauli_string, ModelKind, Pauli, QubitSpec, SystemModel};

use super::{Diagnostics, Method, SolverWarning, SteadyStateResult};

const TWO_QUBIT_PAIRS: [(usize, usize); 1] = [(0, 1)];
const REFRIGERATOR_PAIRS: [(usize, usize); 3] = [(0, 1), (1, 2), (2, 0)];

/// Expansion of `ρ − ⊗τ_i` in the operator basis the closed forms use:
/// `m X + d Y + Σ a_i σ_i^z + Σ b_ij σ_i^z σ_j^z + c σ_1^z σ_2^z σ_3^z`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateCoefficients {
    pub d: f64,
    pub m: f64,
    pub a: Vec<f64>,
    /// `[b]` for two qubits, `[b12, b23, b31]` for the refrigerator.
    pub b: Vec<f64>,
    pub c: Option<f64>,
}

impl StateCoefficients {
    pub fn named(&self) -> Vec<(String, f64)> {
        let mut out = vec![("d".to_string(), self.d), ("m".to_string(), self.m)];
        out.extend(self.a.iter().enumerate().map(|(i, &v)| (format!("a{}", i + 1), v)));
        if self.b.len() == 1 {
            out.push(("b".to_string(), self.b[0]));
        } else {
            for (&(i, j), &v) in REFRIGERATOR_PAIRS.iter().zip(&self.b) {
                out.push((format!("b{}{}", i + 1, j + 1), v));
            }
        }
        if let Some(c) = self.c {
            out.push(("c".to_string(), c));
        }
        out
    }

    /// Per-coefficient absolute differences, in `named` order.
    pub fn deviations(&self, other: &Self) -> Vec<(String, f64)> {
        self.named()
            .into_iter()
            .zip(other.named())
            .map(|((name, a), (_, b))| (name, (a - b).abs()))
            .collect()
    }

    fn pairs(&self) -> &'static [(usize, usize)] {
        if self.b.len() == 1 {
            &TWO_QUBIT_PAIRS
        } else {
            &REFRIGERATOR_PAIRS
        }
    }
}

fn z_string(indices: &[usize], n: usize) -> ComplexMatrix {
    let ops: Vec<(Pauli, usize)> = indices.iter().map(|&i| (Pauli::Z, i)).collect();
    pauli_string(&ops, n).expect("indices within model")
}

fn require(model: &SystemModel, kind: ModelKind) -> Result<()> {
    if model.kind() == kind {
        Ok(())
    } else {
        Err(Error::WrongModelKind { expected: kind.as_str() })
    }
}

fn assemble(model: &SystemModel, coeffs: &StateCoefficients) -> ComplexMatrix {
    let n = model.n_qubits();
    let y = model.coherence().expect("built-in model");
    let mut rho = model.product_thermal_state();
    rho += &model.interaction().scale_real(coeffs.m);
    rho += &y.scale_real(coeffs.d);
    for (i, &a) in coeffs.a.iter().enumerate() {
        rho += &z_string(&[i], n).scale_real(a);
    }
    for (&(i, j), &b) in coeffs.pairs().iter().zip(&coeffs.b) {
        rho += &z_string(&[i, j], n).scale_real(b);
    }
    if let Some(c) = coeffs.c {
        rho += &z_string(&[0, 1, 2], n).scale_real(c);
    }
    rho
}

/// Reads the closed-form coefficients off an arbitrary state of a built-in
/// model by Hilbert–Schmidt projection. `None` for custom models.
pub fn project_coefficients(model: &SystemModel, rho: &ComplexMatrix) -> Option<StateCoefficients> {
    let y = model.coherence()?;
    let n = model.n_qubits();
    let dim = model.hilbert_dim() as f64;
    let delta = rho - &model.product_thermal_state();
    // X and Y each square to a rank-2 projector, so tr X² = tr Y² = 2.
    let d = y.inner(&delta).re / 2.0;
    let m = model.interaction().inner(&delta).re / 2.0;
    let project = |idx: &[usize]| z_string(idx, n).inner(&delta).re / dim;
    let a = (0..n).map(|i| project(&[i])).collect();
    let pairs: &[(usize, usize)] = if n == 2 { &TWO_QUBIT_PAIRS } else { &REFRIGERATOR_PAIRS };
    let b = pairs.iter().map(|&(i, j)| project(&[i, j])).collect();
    let c = (n == 3).then(|| project(&[0, 1, 2]));
    Some(StateCoefficients { d, m, a, b, c })
}

fn finish(
    model: &SystemModel,
    coeffs: &StateCoefficients,
    ratio: f64,
    extra_warning: Option<String>,
) -> SteadyStateResult {
    let raw = assemble(model, coeffs);
    let discarded = raw.anti_hermitian_norm();
    let rho = raw.hermitian_part();
    let residual = model.liouvillian().apply(&rho).frobenius_norm();
    let mut warnings = Vec::new();
    if ratio >= 1.0 {
        warnings.push(SolverWarning::OutsideConvergence { ratio });
    }
    warnings.extend(extra_warning.map(SolverWarning::TemperatureOrdering));
    SteadyStateResult {
        rho,
        method: Method::ClosedForm,
        residual,
        diagnostics: Diagnostics { discarded_antihermitian: discarded, warnings, ..Diagnostics::default() },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoQubitCoefficients {
    pub d: f64,
    pub m: f64,
    pub a1: f64,
    pub a2: f64,
    pub b: f64,
    /// Ratio between consecutive odd (and even) orders.
    pub x: f64,
    pub first_order_d: f64,
    pub first_order_m: f64,
    pub delta_s: f64,
    pub q: f64,
    pub detuning: f64,
    /// `|g² x|`; the series converges below 1.
    pub convergence_ratio: f64,
}

impl TwoQubitCoefficients {
    pub fn state_coefficients(&self) -> StateCoefficients {
        StateCoefficients { d: self.d, m: self.m, a: vec![self.a1, self.a2], b: vec![self.b], c: None }
    }
}

/// `x = −2q² / ((q² + ΔE²) p₁ p₂)`.
pub(crate) fn two_qubit_ratio(model: &SystemModel) -> f64 {
    let (p1, p2) = (model.qubit(0).rate(), model.qubit(1).rate());
    let q = p1 + p2;
    let de = model.detuning().expect("two-qubit model");
    -2.0 * q * q / ((q * q + de * de) * p1 * p2)
}

pub fn closed_form_two_qubit(
    model: &SystemModel,
    _tol: &Tolerances,
) -> Result<(SteadyStateResult, TwoQubitCoefficients)> {
    require(model, ModelKind::TwoQubit)?;
    let g = model.coupling();
    let (q1, q2) = (model.qubit(0), model.qubit(1));
    let (p1, p2) = (q1.rate(), q2.rate());
    let (s1, s2) = (q1.polarization(), q2.polarization());
    let q = p1 + p2;
    let de = q1.energy() - q2.energy();
    let delta_s = 0.5 * (s1 - s2);

    let first_order_d = -q * delta_s / (q * q + de * de);
    let first_order_m = -de / q * first_order_d;
    let x = two_qubit_ratio(model);

    let d = g / (1.0 - g * g * x) * first_order_d;
    let m = -de / q * d;
    let a1 = g / p1 * d;
    let a2 = -g / p2 * d;
    let b = (p2 * s2 * a1 + p1 * s1 * a2) / q;

    let coeffs = TwoQubitCoefficients {
        d,
        m,
        a1,
        a2,
        b,
        x,
        first_order_d,
        first_order_m,
        delta_s,
        q,
        detuning: de,
        convergence_ratio: (g * g * x).abs(),
    };
    let result = finish(model, &coeffs.state_coefficients(), coeffs.convergence_ratio, None);
    Ok((result, coeffs))
}

/// Which denominator to use for the pair coefficients `b_ij`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoefficientTable {
    /// `b_ij = (p_i s_i a_j + p_j s_j a_i) / (p_i + p_j)`, the value the
    /// diagonal balance equations force: `σ_i^z σ_j^z` decays at `p_i + p_j`.
    #[default]
    Derived,
    /// `b_ij = (p_i s_i a_j + p_j s_j a_i) / q_r` as commonly printed. Agrees
    /// with `Derived` only in the two-qubit limit; kept for comparison.
    Published,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefrigeratorCoefficients {
    pub d: f64,
    pub m: f64,
    pub a: [f64; 3],
    pub b12: f64,
    pub b23: f64,
    pub b31: f64,
    pub c: f64,
    pub first_order_d: f64,
    pub first_order_m: f64,
    /// `q_r = p₁ + p₂ + p₃`.
    pub q_r: f64,
    pub delta_s: f64,
    pub detuning: f64,
    /// `q_i = p_i / (q_r − p_i)`.
    pub q_single: [f64; 3],
    /// `q_jk` for pairs 12, 23, 31.
    pub q_pair: [f64; 3],
    /// `ω_jk` for pairs 12, 23, 31.
    pub omega_pair: [f64; 3],
    /// Ratio between consecutive odd orders, read off the denominator of `d`.
    pub x: f64,
    pub convergence_ratio: f64,
    pub table: CoefficientTable,
}

impl RefrigeratorCoefficients {
    pub fn state_coefficients(&self) -> StateCoefficients {
        StateCoefficients {
            d: self.d,
            m: self.m,
            a: self.a.to_vec(),
            b: vec![self.b12, self.b23, self.b31],
            c: Some(self.c),
        }
    }
}

pub fn closed_form_refrigerator(
    model: &SystemModel,
    tol: &Tolerances,
) -> Result<(SteadyStateResult, RefrigeratorCoefficients)> {
    closed_form_refrigerator_with(model, CoefficientTable::Derived, tol)
}

pub fn closed_form_refrigerator_with(
    model: &SystemModel,
    table: CoefficientTable,
    _tol: &Tolerances,
) -> Result<(SteadyStateResult, RefrigeratorCoefficients)> {
    require(model, ModelKind::Refrigerator)?;
    let g = model.coupling();
    let qs = model.qubits();
    let p: Vec<f64> = qs.iter().map(QubitSpec::rate).collect();
    let s: Vec<f64> = qs.iter().map(QubitSpec::polarization).collect();
    let r: Vec<f64> = qs.iter().map(QubitSpec::excited_population).collect();
    let rb: Vec<f64> = qs.iter().map(QubitSpec::ground_population).collect();

    let q_r: f64 = p.iter().sum();
    let de = model.detuning().expect("refrigerator model");
    let delta_s = r[0] * rb[1] * r[2] - rb[0] * r[1] * rb[2];

    let first_order_d = -q_r * delta_s / (q_r * q_r + de * de);
    let first_order_m = -de / q_r * first_order_d;

    let q_single = [0, 1, 2].map(|i| p[i] / (q_r - p[i]));
    // The room qubit enters the interaction with its roles swapped.
    let r_eff = [r[0], rb[1], r[2]];
    let rb_eff = [rb[0], r[1], rb[2]];
    let q_pair = REFRIGERATOR_PAIRS.map(|(j, k)| (p[j] * q_single[k] + p[k] * q_single[j]) / (q_r - p[j] - p[k]));
    let omega_pair = REFRIGERATOR_PAIRS.map(|(j, k)| r_eff[j] * r_eff[k] + rb_eff[j] * rb_eff[k]);

    let second_order_shift = 4.0
        + 2.0 * (q_single.iter().sum::<f64>() + q_pair.iter().zip(&omega_pair).map(|(q, w)| q * w).sum::<f64>());
    let base = q_r * q_r + de * de;
    let d = -g * q_r * delta_s / (base + g * g * second_order_shift);
    let x = -second_order_shift / base;

    let m = -d / q_r * de;
    let a = [0, 1, 2].map(|i| if i % 2 == 0 { 1.0 } else { -1.0 } * g / (2.0 * p[i]) * d);
    let pair = |i: usize, j: usize| {
        let denom = match table {
            CoefficientTable::Derived => p[i] + p[j],
            CoefficientTable::Published => q_r,
        };
        (p[i] * s[i] * a[j] + p[j] * s[j] * a[i]) / denom
    };
    let (b12, b23, b31) = (pair(0, 1), pair(1, 2), pair(2, 0));
    let c = (p[0] * s[0] * b23 + p[1] * s[1] * b31 + p[2] * s[2] * b12 - 0.5 * g * d) / q_r;

    let coeffs = RefrigeratorCoefficients {
        d,
        m,
        a,
        b12,
        b23,
        b31,
        c,
        first_order_d,
        first_order_m,
        q_r,
        delta_s,
        detuning: de,
        q_single,
        q_pair,
        omega_pair,
        x,
        convergence_ratio: (g * g * x).abs(),
        table,
    };
    let result = finish(model, &coeffs.state_coefficients(), coeffs.convergence_ratio, model.temperature_warning());
    Ok((result, coeffs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_refrigerator, build_two_qubit};

    fn spec(e: f64, beta: f64, p: f64) -> QubitSpec {
        QubitSpec::new(e, beta, p).unwrap()
    }

    #[test]
    fn zero_coupling_gives_product_state() {
        let tol = Tolerances::default();
        let two = build_two_qubit(spec(1.0, 1.0, 0.1), spec(1.0, 0.5, 0.1), 0.0).unwrap();
        let (res, c) = closed_form_two_qubit(&two, &tol).unwrap();
        assert_eq!([c.d, c.m, c.a1, c.a2, c.b], [0.0; 5]);
        assert!(res.rho.distance(&two.product_thermal_state()) < 1e-15);

        let fridge = build_refrigerator(spec(1., 1., 0.1), spec(2., 0.5, 0.1), spec(1., 0.1, 0.1), 0.0).unwrap();
        let (res, _) = closed_form_refrigerator(&fridge, &tol).unwrap();
        assert!(res.rho.distance(&fridge.product_thermal_state()) < 1e-15);
    }

    #[test]
    fn resonance_kills_the_x_component() {
        let tol = Tolerances::default();
        let two = build_two_qubit(spec(1.0, 1.0, 0.1), spec(1.0, 0.5, 0.1), 0.05).unwrap();
        assert_eq!(closed_form_two_qubit(&two, &tol).unwrap().1.m, 0.0);
        let fridge = build_refrigerator(spec(1., 1., 0.1), spec(2., 0.5, 0.1), spec(1., 0.1, 0.1), 0.05).unwrap();
        assert_eq!(closed_form_refrigerator(&fridge, &tol).unwrap().1.m, 0.0);
    }

    #[test]
    fn two_qubit_coefficient_relations() {
        let model = build_two_qubit(spec(1.0, 1.0, 0.1), spec(0.6, 0.3, 0.2), 0.07).unwrap();
        let (_, c) = closed_form_two_qubit(&model, &Tolerances::default()).unwrap();
        let g = 0.07;
        assert!((c.m + c.detuning / c.q * c.d).abs() < 1e-16);
        assert!((c.a1 - g / 0.1 * c.d).abs() < 1e-16);
        assert!((c.a2 + g / 0.2 * c.d).abs() < 1e-16);
        assert!(c.x <= 0.0);
    }

    #[test]
    fn wrong_model_kind_is_rejected() {
        let tol = Tolerances::default();
        let two = build_two_qubit(spec(1.0, 1.0, 0.1), spec(1.0, 0.5, 0.1), 0.05).unwrap();
        assert!(matches!(closed_form_refrigerator(&two, &tol), Err(Error::WrongModelKind { .. })));
        let fridge = build_refrigerator(spec(1., 1., 0.1), spec(2., 0.5, 0.1), spec(1., 0.1, 0.1), 0.05).unwrap();
        assert!(matches!(closed_form_two_qubit(&fridge, &tol), Err(Error::WrongModelKind { .. })));
    }

    #[test]
    fn strong_coupling_warns_but_still_evaluates() {
        let model = build_two_qubit(spec(1.0, 1.0, 0.1), spec(1.0, 0.5, 0.1), 0.2).unwrap();
        let (res, c) = closed_form_two_qubit(&model, &Tolerances::default()).unwrap();
        assert!(c.convergence_ratio > 1.0);
        assert!(matches!(res.diagnostics.warnings[0], SolverWarning::OutsideConvergence { .. }));
        assert!(res.residual < 1e-12);
    }

    #[test]
    fn projection_recovers_assembled_coefficients() {
        let model = build_refrigerator(spec(1., 1., 0.1), spec(2.3, 0.5, 0.2), spec(1., 0.1, 0.3), 0.1).unwrap();
        let (res, c) = closed_form_refrigerator(&model, &Tolerances::default()).unwrap();
        let projected = project_coefficients(&model, &res.rho).unwrap();
        for (name, dev) in projected.deviations(&c.state_coefficients()) {
            assert!(dev < 1e-15, "{name}: {dev}");
        }
        let names: Vec<String> = projected.named().into_iter().map(|(n, _)| n).collect();
        assert_eq!(names, ["d", "m", "a1", "a2", "a3", "b12", "b23", "b31", "c"]);
    }

    #[test]
    fn published_table_differs_only_in_pair_terms() {
        let model = build_refrigerator(spec(1., 1., 0.1), spec(2., 0.5, 0.1), spec(1., 0.1, 0.1), 0.05).unwrap();
        let tol = Tolerances::default();
        let (_, derived) = closed_form_refrigerator_with(&model, CoefficientTable::Derived, &tol).unwrap();
        let (_, published) = closed_form_refrigerator_with(&model, CoefficientTable::Published, &tol).unwrap();
        assert_eq!(derived.d, published.d);
        assert_eq!(derived.a, published.a);
        // Equal rates: q_r = 3p versus p_i + p_j = 2p.
        assert!((published.b23 / derived.b23 - 2.0 / 3.0).abs() < 1e-12);
    }
}

//! Qubit networks with local reset dissipators.
//!
//! Basis convention: `|0⟩` is the excited state (σ_z = +1) and `|1⟩` the
//! ground state (σ_z = −1), so `σ⁺ = |0⟩⟨1|` raises. Units have ħ = k_B = 1.

use serde::{Deserialize, Serialize};

use crate::algebra::{insert_factor, kron_all, partial_trace, ComplexMatrix, Superoperator, C64, I};
use crate::error::{Error, Result};

/// One qubit and its bath: level splitting, inverse temperature and reset rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QubitSpec {
    energy: f64,
    beta: f64,
    rate: f64,
}

impl QubitSpec {
    pub fn new(energy: f64, beta: f64, rate: f64) -> Result<Self> {
        let check = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidQubit(format!("{name} must be positive and finite, got {v}")))
            }
        };
        check("energy", energy)?;
        check("beta", beta)?;
        check("rate", rate)?;
        Ok(Self { energy, beta, rate })
    }

    pub fn with_temperature(energy: f64, temperature: f64, rate: f64) -> Result<Self> {
        if !(temperature.is_finite() && temperature > 0.0) {
            return Err(Error::NonPositiveTemperature(temperature));
        }
        Self::new(energy, 1.0 / temperature, rate)
    }

    pub fn energy(&self) -> f64 {
        self.energy
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn temperature(&self) -> f64 {
        1.0 / self.beta
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    /// Bloch z-component of the thermal state, `tanh(−βE/2) ∈ (−1, 0)`.
    pub fn polarization(&self) -> f64 {
        (-0.5 * self.beta * self.energy).tanh()
    }

    /// Excited-state population `(1 + s)/2`.
    pub fn excited_population(&self) -> f64 {
        0.5 * (1.0 + self.polarization())
    }

    /// Ground-state population `(1 − s)/2`.
    pub fn ground_population(&self) -> f64 {
        0.5 * (1.0 - self.polarization())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pauli {
    X,
    Y,
    Z,
    Plus,
    Minus,
}

impl Pauli {
    fn single(self) -> ComplexMatrix {
        let zero = C64::new(0.0, 0.0);
        let one = C64::new(1.0, 0.0);
        let rows = match self {
            Pauli::X => [[zero, one], [one, zero]],
            Pauli::Y => [[zero, -I], [I, zero]],
            Pauli::Z => [[one, zero], [zero, -one]],
            Pauli::Plus => [[zero, one], [zero, zero]],
            Pauli::Minus => [[zero, zero], [one, zero]],
        };
        ComplexMatrix::from_fn(2, |r, c| rows[r][c])
    }
}

/// Single-qubit Pauli operator on qubit `index`, padded with identities.
pub fn pauli(which: Pauli, index: usize, n_qubits: usize) -> Result<ComplexMatrix> {
    if index >= n_qubits {
        return Err(Error::IndexOutOfRange { index, count: n_qubits });
    }
    let id = ComplexMatrix::identity(2);
    let op = which.single();
    let factors: Vec<&ComplexMatrix> = (0..n_qubits).map(|k| if k == index { &op } else { &id }).collect();
    Ok(kron_all(factors))
}

/// Product of Pauli operators, one per listed qubit.
pub fn pauli_string(ops: &[(Pauli, usize)], n_qubits: usize) -> Result<ComplexMatrix> {
    let mut out = ComplexMatrix::identity(1 << n_qubits);
    for &(which, index) in ops {
        out = &out * &pauli(which, index, n_qubits)?;
    }
    Ok(out)
}

/// `τ = (1 + s σ_z)/2`.
pub fn thermal_state(q: &QubitSpec) -> ComplexMatrix {
    ComplexMatrix::from_real_diagonal(&[q.excited_population(), q.ground_population()])
}

/// `ρ ↦ p (τ ⊗ tr_i ρ − ρ)` with `τ` reinserted at position `index`.
pub fn reset_dissipator(q: &QubitSpec, index: usize, n_qubits: usize) -> Result<Superoperator> {
    if index >= n_qubits {
        return Err(Error::IndexOutOfRange { index, count: n_qubits });
    }
    let dims = vec![2; n_qubits];
    let tau = thermal_state(q);
    let rate = q.rate();
    let dim = 1 << n_qubits;
    Ok(Superoperator::from_map(dim, |rho| {
        let rest = partial_trace(rho, &dims, &[index]).expect("dims match by construction");
        let reset = insert_factor(&rest, &tau, index, &dims).expect("dims match by construction");
        (&reset - rho).scale_real(rate)
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    TwoQubit,
    Refrigerator,
    Custom,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::TwoQubit => "two_qubit",
            ModelKind::Refrigerator => "refrigerator",
            ModelKind::Custom => "custom",
        }
    }
}

/// Qubits, an interaction operator `X` and a coupling `g`, so that
/// `H = Σ E_i σ_i^z / 2 + g X`.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemModel {
    kind: ModelKind,
    qubits: Vec<QubitSpec>,
    interaction: ComplexMatrix,
    /// Raising half `A` of the built-in interactions, `X = A + A†`.
    exchange: Option<ComplexMatrix>,
    coupling: f64,
    labels: Vec<String>,
}

fn check_coupling(g: f64) -> Result<()> {
    if g.is_finite() && g >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidModel(format!("coupling must be finite and nonnegative, got {g}")))
    }
}

impl SystemModel {
    /// A model with a user-supplied Hermitian interaction.
    pub fn custom(qubits: Vec<QubitSpec>, interaction: ComplexMatrix, g: f64) -> Result<Self> {
        check_coupling(g)?;
        if qubits.is_empty() || qubits.len() > 10 {
            return Err(Error::InvalidModel(format!(
                "between 1 and 10 qubits supported, got {}",
                qubits.len()
            )));
        }
        let dim = 1 << qubits.len();
        if interaction.dim() != dim {
            return Err(Error::DimensionMismatch { left: dim, right: interaction.dim() });
        }
        if !interaction.is_hermitian(1e-12) {
            return Err(Error::InvalidModel("interaction operator is not Hermitian".into()));
        }
        let labels = (1..=qubits.len()).map(|i| format!("q{i}")).collect();
        Ok(Self { kind: ModelKind::Custom, qubits, interaction, exchange: None, coupling: g, labels })
    }

    fn exchange_model(kind: ModelKind, qubits: Vec<QubitSpec>, exchange: ComplexMatrix, g: f64) -> Result<Self> {
        check_coupling(g)?;
        let interaction = &exchange + &exchange.adjoint();
        let labels = match kind {
            ModelKind::Refrigerator => vec!["cold".into(), "room".into(), "hot".into()],
            _ => (1..=qubits.len()).map(|i| format!("q{i}")).collect(),
        };
        Ok(Self { kind, qubits, interaction, exchange: Some(exchange), coupling: g, labels })
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn qubits(&self) -> &[QubitSpec] {
        &self.qubits
    }

    pub fn qubit(&self, index: usize) -> &QubitSpec {
        &self.qubits[index]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn n_qubits(&self) -> usize {
        self.qubits.len()
    }

    pub fn hilbert_dim(&self) -> usize {
        1 << self.qubits.len()
    }

    pub fn subsystem_dims(&self) -> Vec<usize> {
        vec![2; self.qubits.len()]
    }

    pub fn coupling(&self) -> f64 {
        self.coupling
    }

    pub fn interaction(&self) -> &ComplexMatrix {
        &self.interaction
    }

    pub fn with_coupling(&self, g: f64) -> Result<Self> {
        check_coupling(g)?;
        Ok(Self { coupling: g, ..self.clone() })
    }

    pub fn with_qubit(&self, index: usize, q: QubitSpec) -> Result<Self> {
        if index >= self.qubits.len() {
            return Err(Error::IndexOutOfRange { index, count: self.qubits.len() });
        }
        let mut next = self.clone();
        next.qubits[index] = q;
        Ok(next)
    }

    /// Coherence operator `Y = −iA + iA†` of the built-in models.
    pub fn coherence(&self) -> Option<ComplexMatrix> {
        self.exchange
            .as_ref()
            .map(|a| &a.scale(-I) + &a.adjoint().scale(I))
    }

    /// `E₁ − E₂` for two qubits, `E₁ + E₃ − E₂` for the refrigerator.
    pub fn detuning(&self) -> Option<f64> {
        let e: Vec<f64> = self.qubits.iter().map(QubitSpec::energy).collect();
        match self.kind {
            ModelKind::TwoQubit => Some(e[0] - e[1]),
            ModelKind::Refrigerator => Some(e[0] + e[2] - e[1]),
            ModelKind::Custom => None,
        }
    }

    /// Sum of reset rates.
    pub fn total_rate(&self) -> f64 {
        self.qubits.iter().map(QubitSpec::rate).sum()
    }

    /// Warning text when the refrigerator's baths are not ordered `T₁ < T₂ < T₃`.
    pub fn temperature_warning(&self) -> Option<String> {
        if self.kind != ModelKind::Refrigerator {
            return None;
        }
        let t: Vec<f64> = self.qubits.iter().map(QubitSpec::temperature).collect();
        (!(t[0] < t[1] && t[1] < t[2]))
            .then(|| format!("refrigerator temperatures {t:?} are not ordered cold < room < hot"))
    }

    pub fn local_hamiltonian(&self, index: usize) -> ComplexMatrix {
        let z = pauli(Pauli::Z, index, self.n_qubits()).expect("index within model");
        z.scale_real(0.5 * self.qubits[index].energy())
    }

    /// `H⁽⁰⁾ = Σ E_i σ_i^z / 2`.
    pub fn free_hamiltonian(&self) -> ComplexMatrix {
        let mut h = ComplexMatrix::zeros(self.hilbert_dim());
        for i in 0..self.n_qubits() {
            h += &self.local_hamiltonian(i);
        }
        h
    }

    /// `H_int = g X`.
    pub fn interaction_hamiltonian(&self) -> ComplexMatrix {
        self.interaction.scale_real(self.coupling)
    }

    pub fn hamiltonian(&self) -> ComplexMatrix {
        &self.free_hamiltonian() + &self.interaction_hamiltonian()
    }

    pub fn product_thermal_state(&self) -> ComplexMatrix {
        let taus: Vec<ComplexMatrix> = self.qubits.iter().map(thermal_state).collect();
        kron_all(&taus)
    }

    pub fn dissipator(&self, index: usize) -> Superoperator {
        reset_dissipator(&self.qubits[index], index, self.n_qubits()).expect("index within model")
    }

    pub fn dissipators(&self) -> Vec<Superoperator> {
        (0..self.n_qubits()).map(|i| self.dissipator(i)).collect()
    }

    /// Generator `ρ ↦ −i[H, ρ] + Σ D_i(ρ)`.
    pub fn liouvillian(&self) -> Superoperator {
        self.generator(&self.hamiltonian())
    }

    /// Generator with the interaction switched off.
    pub fn free_liouvillian(&self) -> Superoperator {
        self.generator(&self.free_hamiltonian())
    }

    fn generator(&self, h: &ComplexMatrix) -> Superoperator {
        let mut l = Superoperator::hamiltonian(h);
        for d in self.dissipators() {
            l += &d;
        }
        l
    }
}

pub fn liouvillian(model: &SystemModel) -> Superoperator {
    model.liouvillian()
}

/// Two qubits with exchange coupling `X = σ₁⁺σ₂⁻ + σ₁⁻σ₂⁺`.
pub fn build_two_qubit(q1: QubitSpec, q2: QubitSpec, g: f64) -> Result<SystemModel> {
    let a = pauli_string(&[(Pauli::Plus, 0), (Pauli::Minus, 1)], 2)?;
    SystemModel::exchange_model(ModelKind::TwoQubit, vec![q1, q2], a, g)
}

/// Absorption refrigerator with `X_r = σ₁⁺σ₂⁻σ₃⁺ + σ₁⁻σ₂⁺σ₃⁻`. Qubit 1 is
/// the cold target, 2 the room-temperature spiral, 3 the hot engine.
pub fn build_refrigerator(q1: QubitSpec, q2: QubitSpec, q3: QubitSpec, g: f64) -> Result<SystemModel> {
    let a = pauli_string(&[(Pauli::Plus, 0), (Pauli::Minus, 1), (Pauli::Plus, 2)], 3)?;
    SystemModel::exchange_model(ModelKind::Refrigerator, vec![q1, q2, q3], a, g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{commutator, kron};

    fn spec(e: f64, beta: f64, p: f64) -> QubitSpec {
        QubitSpec::new(e, beta, p).unwrap()
    }

    #[test]
    fn qubit_spec_rejects_nonpositive_values() {
        assert!(QubitSpec::new(0.0, 1.0, 0.1).is_err());
        assert!(QubitSpec::new(-1.0, 1.0, 0.1).is_err());
        assert!(QubitSpec::new(1.0, 0.0, 0.1).is_err());
        assert!(QubitSpec::new(1.0, 1.0, 0.0).is_err());
        assert!(QubitSpec::new(1.0, f64::NAN, 0.1).is_err());
        assert!(matches!(
            QubitSpec::with_temperature(1.0, -2.0, 0.1),
            Err(Error::NonPositiveTemperature(_))
        ));
        let q = QubitSpec::with_temperature(1.0, 4.0, 0.1).unwrap();
        assert_eq!(q.beta(), 0.25);
    }

    #[test]
    fn pauli_embedding() {
        assert_eq!(pauli(Pauli::Z, 0, 1).unwrap(), ComplexMatrix::from_real_diagonal(&[1.0, -1.0]));
        let plus = pauli(Pauli::Plus, 1, 3).unwrap();
        assert_eq!((&plus * &plus).frobenius_norm(), 0.0);
        assert!(matches!(pauli(Pauli::X, 2, 2), Err(Error::IndexOutOfRange { .. })));
        // σ⁺ = (σ^x + iσ^y)/2
        let x = pauli(Pauli::X, 0, 1).unwrap();
        let y = pauli(Pauli::Y, 0, 1).unwrap();
        let built = (&x + &y.scale(I)).scale_real(0.5);
        assert_eq!(built, pauli(Pauli::Plus, 0, 1).unwrap());
    }

    #[test]
    fn thermal_state_values() {
        let tau = thermal_state(&spec(1.0, 1.0, 0.1));
        // s = tanh(−1/2); populations (1 ± s)/2 = 1/(1+e), e/(1+e).
        let e = std::f64::consts::E;
        assert!((tau.get(0, 0).re - 1.0 / (1.0 + e)).abs() < 1e-15);
        assert!((tau.get(1, 1).re - e / (1.0 + e)).abs() < 1e-15);
        assert!((tau.get(0, 0).re - 0.268941).abs() < 1e-6);
        assert!(tau.is_unit_trace(1e-15) && tau.is_diagonal(0.0));

        let cold = thermal_state(&spec(1.0, 200.0, 0.1));
        assert!((cold.get(1, 1).re - 1.0).abs() < 1e-12);
        let hot = thermal_state(&spec(1.0, 1e-12, 0.1));
        assert!(hot.distance(&ComplexMatrix::identity(2).scale_real(0.5)) < 1e-12);
    }

    #[test]
    fn reset_dissipator_fixed_point_and_coherence_decay() {
        let (q1, q2) = (spec(1.0, 1.0, 0.1), spec(1.3, 0.5, 0.25));
        let model = build_two_qubit(q1, q2, 0.0).unwrap();
        let rho0 = model.product_thermal_state();
        let y = model.coherence().unwrap();
        for (i, q) in [q1, q2].iter().enumerate() {
            let d = reset_dissipator(q, i, 2).unwrap();
            assert!(d.apply(&rho0).frobenius_norm() < 1e-15);
            assert!(d.apply(&y).distance(&y.scale_real(-q.rate())) < 1e-15);
        }
        assert!(matches!(reset_dissipator(&q1, 2, 2), Err(Error::IndexOutOfRange { .. })));
    }

    #[test]
    fn two_qubit_operators() {
        let model = build_two_qubit(spec(1.0, 1.0, 0.1), spec(0.7, 0.5, 0.1), 0.1).unwrap();
        let x = model.interaction();
        let y = model.coherence().unwrap();
        assert!(x.is_hermitian(0.0) && y.is_hermitian(0.0));
        assert_eq!(x.trace().norm(), 0.0);
        let de = model.detuning().unwrap();
        assert!((de - 0.3).abs() < 1e-15);
        let h0 = model.free_hamiltonian();
        // [H⁽⁰⁾, X] = iΔE·Y and [H⁽⁰⁾, Y] = −iΔE·X.
        assert!(commutator(&h0, x).unwrap().distance(&y.scale(I * de)) < 1e-14);
        assert!(commutator(&h0, &y).unwrap().distance(&x.scale(-I * de)) < 1e-14);

        let resonant = build_two_qubit(spec(1.0, 1.0, 0.1), spec(1.0, 0.5, 0.1), 0.1).unwrap();
        assert!(commutator(&resonant.free_hamiltonian(), resonant.interaction()).unwrap().frobenius_norm() < 1e-15);
    }

    #[test]
    fn two_qubit_coherence_generation() {
        let (q1, q2) = (spec(1.0, 1.0, 0.1), spec(1.0, 0.5, 0.1));
        let model = build_two_qubit(q1, q2, 0.0).unwrap();
        let tau12 = kron(&thermal_state(&q1), &thermal_state(&q2));
        let ds = 0.5 * (q1.polarization() - q2.polarization());
        let lhs = commutator(model.interaction(), &tau12).unwrap().scale(I);
        assert!(lhs.distance(&model.coherence().unwrap().scale_real(ds)) < 1e-15);
    }

    #[test]
    fn refrigerator_operators() {
        let q = [spec(1.0, 1.0, 0.1), spec(2.5, 0.5, 0.2), spec(1.2, 0.1, 0.3)];
        let model = build_refrigerator(q[0], q[1], q[2], 0.05).unwrap();
        let x = model.interaction();
        let y = model.coherence().unwrap();
        assert!(x.is_hermitian(0.0));
        assert_eq!(x.trace().norm(), 0.0);

        let x2 = x * x;
        assert!(x2.is_diagonal(0.0));
        let diag: Vec<f64> = (0..8).map(|k| x2.get(k, k).re).collect();
        // Nonzero exactly on |010⟩ (index 2) and |101⟩ (index 5).
        assert_eq!(diag, vec![0., 0., 1., 0., 0., 1., 0., 0.]);

        let de = model.detuning().unwrap();
        assert!((de - (1.0 + 1.2 - 2.5)).abs() < 1e-15);
        let h0 = model.free_hamiltonian();
        assert!(commutator(&h0, x).unwrap().distance(&y.scale(I * de)) < 1e-14);

        let s: Vec<f64> = q.iter().map(QubitSpec::polarization).collect();
        let r: Vec<f64> = q.iter().map(QubitSpec::excited_population).collect();
        let rb: Vec<f64> = q.iter().map(QubitSpec::ground_population).collect();
        let ds = r[0] * rb[1] * r[2] - rb[0] * r[1] * rb[2];
        assert!((ds - (s[0] - s[1] + s[2] - s[0] * s[1] * s[2]) / 4.0).abs() < 1e-15);
        let lhs = commutator(x, &model.product_thermal_state()).unwrap().scale(I);
        assert!(lhs.distance(&y.scale_real(ds)) < 1e-15);
    }

    #[test]
    fn temperature_ordering_is_a_warning() {
        let inverted = build_refrigerator(spec(1., 0.1, 0.1), spec(2., 0.5, 0.1), spec(1., 1.0, 0.1), 0.01).unwrap();
        assert!(inverted.temperature_warning().is_some());
        let ordered = build_refrigerator(spec(1., 1.0, 0.1), spec(2., 0.5, 0.1), spec(1., 0.1, 0.1), 0.01).unwrap();
        assert!(ordered.temperature_warning().is_none());
    }

    #[test]
    fn custom_model_validation() {
        let q = vec![spec(1.0, 1.0, 0.1)];
        assert!(SystemModel::custom(q.clone(), ComplexMatrix::identity(4), 0.1).is_err());
        let skew = ComplexMatrix::from_fn(2, |r, c| if r < c { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) });
        assert!(SystemModel::custom(q.clone(), skew, 0.1).is_err());
        assert!(SystemModel::custom(q.clone(), ComplexMatrix::identity(2), -0.1).is_err());
        let m = SystemModel::custom(q, pauli(Pauli::X, 0, 1).unwrap(), 0.1).unwrap();
        assert_eq!(m.detuning(), None);
        assert!(m.coherence().is_none());
    }
}

//! Seeded parameter draws and the second-law violation search.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::algebra::Tolerances;
use crate::error::Result;
use crate::model::{build_refrigerator, build_two_qubit, ModelKind, QubitSpec, SystemModel};
use crate::thermo::{consistency_audit, ThermoOptions};

/// Uniform sampling box for random parameter draws.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParameterBox {
    pub energy: (f64, f64),
    pub beta: (f64, f64),
    pub rate: (f64, f64),
    pub coupling: (f64, f64),
}

impl Default for ParameterBox {
    fn default() -> Self {
        Self { energy: (0.2, 2.0), beta: (0.1, 3.0), rate: (0.05, 1.0), coupling: (0.01, 0.3) }
    }
}

impl ParameterBox {
    fn draw(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
        if lo == hi {
            lo
        } else {
            rng.gen_range(lo..hi)
        }
    }

    fn qubit_with_energy(&self, rng: &mut ChaCha8Rng, energy: f64) -> QubitSpec {
        let beta = Self::draw(rng, self.beta);
        let rate = Self::draw(rng, self.rate);
        QubitSpec::new(energy, beta, rate).expect("sampling box holds positive values")
    }

    fn qubit(&self, rng: &mut ChaCha8Rng) -> QubitSpec {
        let energy = Self::draw(rng, self.energy);
        self.qubit_with_energy(rng, energy)
    }

    /// Independent random models of the given kind.
    pub fn models(&self, kind: ModelKind, seed: u64, count: usize) -> Vec<SystemModel> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count)
            .map(|_| {
                let g = Self::draw(&mut rng, self.coupling);
                match kind {
                    ModelKind::Refrigerator => {
                        let (a, b, c) = (self.qubit(&mut rng), self.qubit(&mut rng), self.qubit(&mut rng));
                        build_refrigerator(a, b, c, g)
                    }
                    _ => build_two_qubit(self.qubit(&mut rng), self.qubit(&mut rng), g),
                }
                .expect("valid sampled model")
            })
            .collect()
    }

    /// Random models with zero detuning: `E₂ = E₁` for two qubits,
    /// `E₂ = E₁ + E₃` for the refrigerator.
    pub fn resonant_models(&self, kind: ModelKind, seed: u64, count: usize) -> Vec<SystemModel> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count)
            .map(|_| {
                let g = Self::draw(&mut rng, self.coupling);
                match kind {
                    ModelKind::Refrigerator => {
                        let e1 = Self::draw(&mut rng, self.energy);
                        let e3 = Self::draw(&mut rng, self.energy);
                        let a = self.qubit_with_energy(&mut rng, e1);
                        let b = self.qubit_with_energy(&mut rng, e1 + e3);
                        let c = self.qubit_with_energy(&mut rng, e3);
                        build_refrigerator(a, b, c, g)
                    }
                    _ => {
                        let e = Self::draw(&mut rng, self.energy);
                        let a = self.qubit_with_energy(&mut rng, e);
                        let b = self.qubit_with_energy(&mut rng, e);
                        build_two_qubit(a, b, g)
                    }
                }
                .expect("valid sampled model")
            })
            .collect()
    }
}

/// A detuned two-qubit parameter point with negative entropy production.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViolationPoint {
    pub q1: QubitSpec,
    pub q2: QubitSpec,
    pub g: f64,
    pub entropy_rate: f64,
    /// Draw index at which the point was found; grid points come first.
    pub index: usize,
}

impl ViolationPoint {
    pub fn model(&self) -> SystemModel {
        build_two_qubit(self.q1, self.q2, self.g).expect("stored point is valid")
    }
}

fn violation_grid() -> Vec<(QubitSpec, QubitSpec, f64)> {
    // ΔE < 0 with β₂E₂ > β₁E₁ is where the two factors of the entropy
    // production can disagree in sign.
    let mut points = Vec::new();
    for &e2 in &[1.5, 2.0] {
        for &beta2 in &[1.0, 2.0] {
            for &p1 in &[0.1, 1.0] {
                for &g in &[0.1, 0.2] {
                    let q1 = QubitSpec::new(1.0, 0.5, p1).expect("grid values are positive");
                    let q2 = QubitSpec::new(e2, beta2, 0.1).expect("grid values are positive");
                    points.push((q1, q2, g));
                }
            }
        }
    }
    points
}

/// Deterministic grid followed by `draws` seeded random two-qubit points;
/// returns the first detuned point with entropy production below `-threshold`.
pub fn find_second_law_violation(
    bounds: &ParameterBox,
    seed: u64,
    draws: usize,
    threshold: f64,
    tol: &Tolerances,
) -> Result<Option<ViolationPoint>> {
    let opts = ThermoOptions::default();
    let random = bounds.models(ModelKind::TwoQubit, seed, draws);
    let random = random.iter().map(|m| (*m.qubit(0), *m.qubit(1), m.coupling()));
    for (index, (q1, q2, g)) in violation_grid().into_iter().chain(random).enumerate() {
        let model = build_two_qubit(q1, q2, g)?;
        if model.detuning() == Some(0.0) {
            continue;
        }
        let report = consistency_audit(&model, &opts, tol)?;
        if report.entropy_rate < -threshold {
            return Ok(Some(ViolationPoint { q1, q2, g, entropy_rate: report.entropy_rate, index }));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn draws_are_reproducible() {
        let b = ParameterBox::default();
        assert_eq!(b.models(ModelKind::TwoQubit, 9, 5), b.models(ModelKind::TwoQubit, 9, 5));
        assert_ne!(b.models(ModelKind::TwoQubit, 9, 5), b.models(ModelKind::TwoQubit, 10, 5));
    }

    #[test]
    fn resonant_draws_have_zero_detuning() {
        let b = ParameterBox::default();
        for kind in [ModelKind::TwoQubit, ModelKind::Refrigerator] {
            for m in b.resonant_models(kind, 1, 20) {
                assert!(m.detuning().unwrap().abs() < 1e-15);
            }
        }
    }

    #[test]
    fn violation_search_finds_a_detuned_point() {
        let found = find_second_law_violation(&ParameterBox::default(), 1, 100, 1e-6, &Tolerances::default())
            .unwrap()
            .expect("violating point");
        assert!(found.entropy_rate < -1e-6);
        assert!(found.model().detuning().unwrap() != 0.0);
    }
}

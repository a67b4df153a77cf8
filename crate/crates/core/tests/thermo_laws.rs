use lme::algebra::Tolerances;
use lme::model::{build_refrigerator, build_two_qubit, QubitSpec};
use lme::solvers::{closed_form_refrigerator, closed_form_two_qubit, exact_steady_state};
use lme::thermo::{audit_state, consistency_audit, heat_currents, interaction_currents, HeatHamiltonian, ThermoOptions, Verdict};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn spec(e: f64, beta: f64, p: f64) -> QubitSpec {
    QubitSpec::new(e, beta, p).unwrap()
}

#[test]
fn two_qubit_currents_match_closed_expressions() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let tol = Tolerances::default();
    for _ in 0..40 {
        let q1 = spec(rng.gen_range(0.3..2.0), rng.gen_range(0.1..2.0), rng.gen_range(0.05..1.0));
        let q2 = spec(rng.gen_range(0.3..2.0), rng.gen_range(0.1..2.0), rng.gen_range(0.05..1.0));
        let g = rng.gen_range(0.001..0.2);
        let model = build_two_qubit(q1, q2, g).unwrap();
        let (state, c) = closed_form_two_qubit(&model, &tol).unwrap();
        let heat = heat_currents(&model, &state.rho, HeatHamiltonian::Full);
        let inter = interaction_currents(&model, &state.rho);
        for (i, q) in [q1, q2].iter().enumerate() {
            let sign = if i == 0 { -1.0 } else { 1.0 };
            let expected_q = 2.0 * g * c.d * (sign * q.energy() + q.rate() / c.q * c.detuning);
            let expected_qg = 2.0 * g * c.d * sign * q.energy();
            assert!((heat[i] - expected_q).abs() <= 1e-10);
            assert!((inter[i] - expected_qg).abs() <= 1e-10);
            // The two current sets differ by a multiple of the detuning.
            assert!((heat[i] - inter[i] - 2.0 * g * c.d * q.rate() / c.q * c.detuning).abs() <= 1e-12);
        }
        let sum_g: f64 = inter.iter().sum();
        assert!((sum_g + 2.0 * g * c.d * c.detuning).abs() <= 1e-12);
    }
}

#[test]
fn refrigerator_interaction_currents_have_two_qubit_form() {
    let tol = Tolerances::default();
    let q = [spec(1.0, 1.0, 0.1), spec(2.3, 0.5, 0.2), spec(1.0, 0.1, 0.3)];
    let g = 0.07;
    let model = build_refrigerator(q[0], q[1], q[2], g).unwrap();
    let (state, c) = closed_form_refrigerator(&model, &tol).unwrap();
    let inter = interaction_currents(&model, &state.rho);
    let heat = heat_currents(&model, &state.rho, HeatHamiltonian::Full);
    for i in 0..3 {
        let sign = if i % 2 == 0 { -1.0 } else { 1.0 };
        assert!((inter[i] - 2.0 * g * c.d * sign * q[i].energy()).abs() <= 1e-12);
        assert!((heat[i] - 2.0 * g * c.d * (sign * q[i].energy() + q[i].rate() / c.q_r * c.detuning)).abs() <= 1e-12);
    }
}

#[test]
fn first_law_holds_at_every_exact_steady_state() {
    let mut rng = ChaCha8Rng::seed_from_u64(19);
    let tol = Tolerances::default();
    for _ in 0..30 {
        let q: Vec<QubitSpec> = (0..3)
            .map(|_| spec(rng.gen_range(0.3..2.0), rng.gen_range(0.1..2.0), rng.gen_range(0.05..1.0)))
            .collect();
        let g = rng.gen_range(0.0..0.3);
        for model in [build_two_qubit(q[0], q[1], g).unwrap(), build_refrigerator(q[0], q[1], q[2], g).unwrap()] {
            let report = consistency_audit(&model, &ThermoOptions::default(), &tol).unwrap();
            assert!(report.first_law_residual <= 1e-12);
        }
    }
}

#[test]
fn resonant_currents_coincide_and_are_antisymmetric() {
    let tol = Tolerances::default();
    let model = build_two_qubit(spec(1.2, 1.0, 0.1), spec(1.2, 0.3, 0.4), 0.1).unwrap();
    let rho = exact_steady_state(&model, &tol).unwrap().rho;
    let heat = heat_currents(&model, &rho, HeatHamiltonian::Full);
    let inter = interaction_currents(&model, &rho);
    assert!((heat[0] + heat[1]).abs() <= 1e-14);
    for i in 0..2 {
        assert!((heat[i] - inter[i]).abs() <= 1e-12);
    }

    let fridge = build_refrigerator(spec(1.0, 1.0, 0.1), spec(3.0, 0.5, 0.2), spec(2.0, 0.1, 0.3), 0.1).unwrap();
    let rho = exact_steady_state(&fridge, &tol).unwrap().rho;
    let heat = heat_currents(&fridge, &rho, HeatHamiltonian::Full);
    let inter = interaction_currents(&fridge, &rho);
    for i in 0..3 {
        assert!((heat[i] - inter[i]).abs() <= 1e-12);
    }
}

#[test]
fn refrigeration_needs_the_virtual_qubit_colder_than_the_target() {
    // Cooling of qubit 1 requires β₂E₂ > β₁E₁ + β₃E₃ at resonance.
    let tol = Tolerances::default();
    let opts = ThermoOptions::default();
    let cooling = build_refrigerator(
        QubitSpec::with_temperature(1.0, 1.0, 0.1).unwrap(),
        QubitSpec::with_temperature(3.0, 2.0, 0.1).unwrap(),
        QubitSpec::with_temperature(2.0, 10.0, 0.1).unwrap(),
        0.05,
    )
    .unwrap();
    let report = consistency_audit(&cooling, &opts, &tol).unwrap();
    assert_eq!(report.cooling, Some(true));
    assert!(report.heat[0] > 0.0 && report.heat[2] > 0.0 && report.heat[1] < 0.0);
    assert_eq!(report.verdict, Verdict::Consistent);

    let heating = build_refrigerator(
        QubitSpec::with_temperature(1.0, 1.0, 0.1).unwrap(),
        QubitSpec::with_temperature(2.0, 2.0, 0.1).unwrap(),
        QubitSpec::with_temperature(1.0, 10.0, 0.1).unwrap(),
        0.05,
    )
    .unwrap();
    assert_eq!(consistency_audit(&heating, &opts, &tol).unwrap().cooling, Some(false));
}

#[test]
fn audit_flags_a_broken_first_law() {
    // A non-steady state generally violates energy balance.
    let model = build_two_qubit(spec(1.0, 1.0, 0.1), spec(1.0, 0.5, 0.1), 0.1).unwrap();
    let report = audit_state(&model, &lme::algebra::ComplexMatrix::identity(4).scale_real(0.25), &ThermoOptions::default()).unwrap();
    assert_eq!(report.verdict, Verdict::FirstLawViolation);
}

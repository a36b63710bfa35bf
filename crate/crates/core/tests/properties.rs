use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use pulseqfm::diffgeo::rank_report;
use pulseqfm::gates::{decompose, gate_unitary, GateKind};
use pulseqfm::model::{ansatz_by_name, Mode, QfmModel, ANSATZ_NAMES};
use pulseqfm::pulse::{pulse_realised_composite, scaled_gate_unitary};
use pulseqfm::spectral::{coefficient_mse, extract_coefficients, uniform_grid, CoefficientVector};
use pulseqfm::train::{generate_target, mse_loss, train_model, AdamOptions};

fn model(name: &str, mode: Mode, seed: u64) -> QfmModel {
    let a = ansatz_by_name(name, 3).unwrap();
    let mut m = QfmModel::new(&a, 2, Mode::Gate).unwrap();
    m.randomize_theta(&mut ChaCha8Rng::seed_from_u64(seed));
    m.with_mode(mode)
}

fn ansatz_name() -> impl Strategy<Value = &'static str> {
    prop::sample::select(ANSATZ_NAMES.to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn decompositions_match_gates(theta in -10.0f64..10.0, phi in -10.0f64..10.0, omega in -10.0f64..10.0) {
        for kind in GateKind::ALL {
            let angles: Vec<f64> = [theta, phi, omega][..kind.angle_count()].to_vec();
            let u = gate_unitary(kind, &angles).unwrap();
            let p = decompose(kind).product(&angles).unwrap();
            prop_assert!(u.phase_aligned_diff(&p) < 1e-10, "{kind:?}");
        }
    }

    #[test]
    fn unit_lambda_is_the_logical_gate(theta in -10.0f64..10.0) {
        for kind in [GateKind::Rx, GateKind::Ry, GateKind::Rz] {
            let a = scaled_gate_unitary(kind, theta, 1.0).unwrap();
            let b = gate_unitary(kind, &[theta]).unwrap();
            prop_assert_eq!(a.entries(), b.entries());
        }
        for kind in [GateKind::Crx, GateKind::Cry, GateKind::Crz, GateKind::Rot] {
            let angles = vec![theta; kind.angle_count()];
            let ones = vec![1.0; decompose(kind).sub_gates().len()];
            let p = pulse_realised_composite(kind, &angles, &ones).unwrap();
            prop_assert!(p.phase_aligned_diff(&gate_unitary(kind, &angles).unwrap()) < 1e-10);
        }
    }

    #[test]
    fn nominal_modes_reproduce_gate_mode(name in ansatz_name(), seed in any::<u64>(), x in -7.0f64..7.0) {
        let g = model(name, Mode::Gate, seed);
        for mode in [Mode::Decomposed, Mode::Pulse] {
            prop_assert!((g.with_mode(mode).forward(x) - g.forward(x)).abs() < 1e-10);
        }
    }

    #[test]
    fn forward_is_periodic_and_bounded(name in ansatz_name(), seed in any::<u64>(), x in -7.0f64..7.0) {
        let m = model(name, Mode::Pulse, seed);
        let (a, b) = (m.forward(x), m.forward(x + std::f64::consts::TAU));
        prop_assert!((a - b).abs() < 1e-10);
        prop_assert!(a.abs() <= 1.0 + 1e-12);
    }

    #[test]
    fn state_norm_is_preserved(name in ansatz_name(), seed in any::<u64>(), x in -7.0f64..7.0) {
        let s = model(name, Mode::Pulse, seed).state(x);
        prop_assert!((s.norm_sqr() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn coefficients_are_hermitian_and_parseval_holds(name in ansatz_name(), seed in any::<u64>()) {
        let m = model(name, Mode::Gate, seed);
        let c = extract_coefficients(&m).unwrap();
        prop_assert!(c.hermitian_defect() < 1e-9);
        let target = generate_target(&m.spectrum(), &mut ChaCha8Rng::seed_from_u64(seed ^ 1)).unwrap();
        let coeff = coefficient_mse(&c, &target.coefficients).unwrap();
        let grid = mse_loss(&m, &target).unwrap();
        prop_assert!((coeff - grid).abs() < 1e-8);
    }

    #[test]
    fn spectrum_is_closed(name in ansatz_name(), seed in any::<u64>()) {
        let m = model(name, Mode::Pulse, seed);
        let grid = uniform_grid(4 * 27);
        let values = m.evaluate(&grid);
        let wide = CoefficientVector::from_samples((-53..=53).collect(), &values);
        let leak: f64 = wide
            .frequencies()
            .iter()
            .zip(wide.coefficients())
            .filter(|(w, _)| w.abs() > 13)
            .map(|(_, c)| c.norm_sqr())
            .sum();
        prop_assert!(leak < 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn rank_gain_is_bounded(name in ansatz_name(), seed in any::<u64>()) {
        let r = rank_report(&model(name, Mode::Pulse, seed)).unwrap();
        prop_assert!(r.rank_ext >= r.rank_theta);
        prop_assert!(r.rank_gain <= r.gain_bound());
    }

    #[test]
    fn training_loss_agrees_across_representations(seed in any::<u64>()) {
        let m = model("rot_crx", Mode::Pulse, seed);
        let target = generate_target(&m.spectrum(), &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let mut run = m.clone();
        let history = train_model(&mut run, &target, AdamOptions::default(), 5, false).unwrap();
        prop_assert!(history.iter().all(|l| *l >= 0.0));
        let c = extract_coefficients(&run).unwrap();
        let coeff = coefficient_mse(&c, &target.coefficients).unwrap();
        prop_assert!((coeff - history[history.len() - 1]).abs() < 1e-8);
    }
}

#[test]
fn training_is_independent_of_thread_count() {
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            let cfg = pulseqfm::train::TrainConfig {
                ansatz: "ry_crz".into(),
                mode: Mode::Pulse,
                seeds: vec![0, 1],
                steps: 10,
                ..Default::default()
            };
            pulseqfm::train::train_seeded(&cfg).unwrap()
        })
    };
    let (a, b) = (run(1), run(3));
    for (ra, rb) in a.runs.iter().zip(&b.runs) {
        let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&ra.mse), bits(&rb.mse));
        assert_eq!(bits(&ra.final_params), bits(&rb.final_params));
    }
}

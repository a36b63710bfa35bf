//! Acceptance suite. Runs every criterion in order, prints one PASS/FAIL line
//! each and exits nonzero if any criterion fails.

use std::f64::consts::{PI, TAU};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use pulseqfm::diffgeo::{example2_model, loss_gradient, rank_report, CONVERGED_GRAD_NORM};
use pulseqfm::gates::{decompose, gate_unitary, GateKind};
use pulseqfm::linalg::UnitaryMatrix;
use pulseqfm::metrics::{expressibility, fcc, fidelity_distortion_sweep, SamplingConfig, DEFAULT_BINS};
use pulseqfm::model::{ansatz_by_name, Ansatz, Mode, QfmModel, ANSATZ_NAMES};
use pulseqfm::oracles::{central_differences, integrate};
use pulseqfm::pulse::{
    pulse_area, pulse_realised_composite, scaled_gate_unitary, time_sliced_propagator, Calibration, PulseParams,
};
use pulseqfm::spectral::{
    coefficient_mse, coefficient_variance_sweep, extract_coefficients, sigma2_grid, VarianceSweepConfig,
};
use pulseqfm::train::{
    converge_theta, generate_target, initial_model, mse_loss, run_comparison, seeded_target, ConvergeOptions,
    TrainConfig,
};
use pulseqfm_cli::config::{resolve, Experiment, Overrides};
use pulseqfm_cli::run_experiment;

const COMPOSITE: [&str; 3] = ["ry_crz", "rot_cry", "rot_crx"];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn ansatz(name: &str) -> Ansatz {
    ansatz_by_name(name, 3).unwrap()
}

fn random_model(name: &str, mode: Mode, rng: &mut ChaCha8Rng) -> QfmModel {
    let mut m = QfmModel::new(&ansatz(name), 2, Mode::Gate).unwrap();
    m.randomize_theta(rng);
    m.with_mode(mode)
}

fn pulse_area_closed_form() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let window = rng.random_range(0.5..20.0);
        let p = PulseParams::gaussian(
            rng.random_range(0.1..5.0),
            rng.random_range(0.05..5.0),
            rng.random_range(0.0..window),
            window,
        )
        .unwrap();
        // panels no wider than σ so the adaptive rule cannot step over the peak
        let panels = (window / p.width()).ceil() as usize;
        let h = window / panels as f64;
        let quad: f64 = (0..panels)
            .map(|k| integrate(&|t| p.envelope_at(t), k as f64 * h, (k + 1) as f64 * h, 1e-16))
            .sum();
        worst = worst.max(((quad - pulse_area(&p)) / quad).abs());
    }
    let mut worst_contained = 0.0f64;
    for _ in 0..100 {
        let (a, s) = (rng.random_range(0.1..5.0), rng.random_range(0.05..5.0));
        let p = PulseParams::canonical(a, s).unwrap();
        let approx = a * s * TAU.sqrt();
        worst_contained = worst_contained.max(((pulse_area(&p) - approx) / approx).abs());
    }
    outcome(
        worst < 1e-10 && worst_contained < 1e-4,
        format!("max rel err {worst:.1e} (erf form), {worst_contained:.1e} (contained)"),
    )
}

fn pulse_area_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let cal = Calibration::default();
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let p = PulseParams::canonical(rng.random_range(0.2..3.0), rng.random_range(0.2..3.0)).unwrap();
        let theta = rng.random_range(-PI..PI);
        for axis in [GateKind::Rx, GateKind::Ry, GateKind::Rz] {
            let sliced = time_sliced_propagator(&p, &cal, theta, axis, 2000).unwrap();
            let model = scaled_gate_unitary(axis, theta, cal.lambda(&p).value()).unwrap();
            worst = worst.max(sliced.max_abs_diff(&model));
        }
    }
    outcome(worst < 1e-7, format!("max entrywise diff {worst:.1e}"))
}

fn control_zero_block(u: &UnitaryMatrix) -> UnitaryMatrix {
    UnitaryMatrix::from_2x2(u.get(0, 0), u.get(0, 1), u.get(1, 0), u.get(1, 1))
}

fn example1_algebra() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut equal, mut built, mut printed) = (0.0f64, 0.0f64, 0.0f64);
    let on_target = |kind, angle: f64| UnitaryMatrix::identity(2).kron(&gate_unitary(kind, &[angle]).unwrap());
    let cx = gate_unitary(GateKind::Cx, &[]).unwrap();
    for _ in 0..20 {
        let theta = rng.random_range(0.0..TAU);
        let l = rng.random_range(0.5..1.5);
        let (l1, l2) = (rng.random_range(0.5..1.5), rng.random_range(0.5..1.5));
        let u = pulse_realised_composite(GateKind::Crx, &[theta], &[1.0, l, 1.0, l, 1.0, 1.0]).unwrap();
        equal = equal.max(control_zero_block(&u).max_abs_diff(&UnitaryMatrix::identity(2)));

        // gate as built (sub-gates in application order)
        let u = pulse_realised_composite(GateKind::Crx, &[theta], &[1.0, l1, 1.0, l2, 1.0, 1.0]).unwrap();
        let expect = gate_unitary(GateKind::Rx, &[theta / 2.0 * (l1 - l2)]).unwrap();
        built = built.max(control_zero_block(&u).max_abs_diff(&expect));

        // the printed factor sequence taken as a matrix product
        let m = on_target(GateKind::Rz, PI / 2.0)
            .mul(&on_target(GateKind::Ry, theta / 2.0 * l1))
            .mul(&cx)
            .mul(&on_target(GateKind::Ry, -theta / 2.0 * l2))
            .mul(&cx)
            .mul(&on_target(GateKind::Rz, -PI / 2.0));
        let expect = gate_unitary(GateKind::Rx, &[-theta / 2.0 * (l1 - l2)]).unwrap();
        printed = printed.max(control_zero_block(&m).max_abs_diff(&expect));
    }
    outcome(
        equal < 1e-12 && built < 1e-10 && printed < 1e-10,
        format!(
            "identity err {equal:.1e}; RX(+θ/2(λ₁−λ₂)) on built gate {built:.1e}; RX(−θ/2(λ₁−λ₂)) on matrix-product form {printed:.1e}"
        ),
    )
}

fn table_one() -> Outcome {
    let expected = [
        (GateKind::Rz, 1),
        (GateKind::Cz, 1),
        (GateKind::Rx, 3),
        (GateKind::Ry, 3),
        (GateKind::H, 4),
        (GateKind::Rot, 5),
        (GateKind::Cx, 9),
        (GateKind::Cy, 11),
        (GateKind::Crz, 20),
        (GateKind::Cry, 24),
        (GateKind::Crx, 26),
    ];
    let counts_ok = expected.iter().all(|&(k, n)| decompose(k).pulse_param_count() == n);
    let mut worst = 0.0f64;
    for kind in GateKind::ALL {
        for i in 0..32 {
            let base = -2.0 * PI + 4.0 * PI * i as f64 / 31.0;
            let angles: Vec<f64> = (0..kind.angle_count()).map(|j| base + 0.37 * j as f64).collect();
            let u = gate_unitary(kind, &angles).unwrap();
            worst = worst.max(decompose(kind).product(&angles).unwrap().phase_aligned_diff(&u));
        }
    }
    outcome(
        counts_ok && worst < 1e-10,
        format!("pulse counts match: {counts_ok}, max round-trip err {worst:.1e}"),
    )
}

fn spectral_correctness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let m = random_model("rot_crx", Mode::Gate, &mut rng);
    let spec = m.spectrum();
    let freqs_ok = spec.len() == 27
        && spec.integer_frequencies() == Some((-13..=13).collect())
        && spec.redundancies().iter().all(|&r| r == 1);
    let c = extract_coefficients(&m).unwrap();
    let recon = (0..50)
        .map(|_| {
            let x = rng.random_range(-10.0..10.0);
            (c.evaluate(x) - m.forward(x)).abs()
        })
        .fold(0.0, f64::max);
    let herm = c.hermitian_defect();
    let target = generate_target(&spec, &mut rng).unwrap();
    let parseval = (mse_loss(&m, &target).unwrap() - coefficient_mse(&c, &target.coefficients).unwrap()).abs();
    outcome(
        freqs_ok && recon < 1e-8 && herm < 1e-9 && parseval < 1e-8,
        format!("|Ω| = {}, R(ω) = 1: {freqs_ok}, recon {recon:.1e}, hermitian {herm:.1e}, parseval {parseval:.1e}", spec.len()),
    )
}

fn gradient_correctness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let xs: Vec<f64> = (0..7).map(|i| 0.3 + 0.9 * i as f64).collect();
    let mut worst = 0.0f64;
    for mode in Mode::ALL {
        for i in 0..10 {
            let name = ANSATZ_NAMES[i % ANSATZ_NAMES.len()];
            let mut m = random_model(name, mode, &mut rng);
            let mut p = m.trainable();
            for v in p[m.theta().len()..].iter_mut() {
                *v = rng.random_range(0.8..1.2);
            }
            m.set_trainable(&p).unwrap();
            let analytic = m.parameter_gradients(&xs);
            let numeric = central_differences(
                |q| {
                    let mut mm = m.clone();
                    mm.set_trainable(q).unwrap();
                    mm.evaluate(&xs)
                },
                &p,
                1e-5,
            );
            for (a, n) in analytic.iter().flatten().zip(numeric.iter().flatten()) {
                worst = worst.max((a - n).abs());
            }
        }
    }
    outcome(worst < 1e-6, format!("max |PSR - FD| {worst:.1e} over 30 models"))
}

fn rank_results() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut toy_ok = true;
    for _ in 0..10 {
        let mut m = example2_model(1.0, 2.0, Mode::Gate);
        m.set_theta(&[rng.random_range(0.1..TAU)]).unwrap();
        let r = rank_report(&m).unwrap();
        toy_ok &= (r.rank_theta, r.rank_ext) == (1, 2);
    }
    let mut basis_gain = 0;
    let mut crx_hits = 0;
    let mut bound_ok = true;
    for _ in 0..20 {
        let b = rank_report(&random_model("basis_rx", Mode::Gate, &mut rng)).unwrap();
        let c = rank_report(&random_model("rot_crx", Mode::Gate, &mut rng)).unwrap();
        basis_gain = basis_gain.max(b.rank_gain);
        crx_hits += usize::from(c.rank_gain >= 1);
        bound_ok &= b.rank_gain <= b.gain_bound() && c.rank_gain <= c.gain_bound();
    }
    outcome(
        toy_ok && basis_gain == 0 && crx_hits >= 18 && bound_ok,
        format!("toy 1 -> 2: {toy_ok}, basis max gain {basis_gain}, rot_crx gain>=1 at {crx_hits}/20, bound ok: {bound_ok}"),
    )
}

fn training_ordering() -> Outcome {
    let names: Vec<String> = COMPOSITE.iter().map(|s| s.to_string()).collect();
    let base = TrainConfig::default();
    let cmp = run_comparison(&names, &Mode::ALL, &base).unwrap();
    let mut pass = true;
    let mut parts = Vec::new();
    for a in COMPOSITE {
        let row = |mode| cmp.rows.iter().find(|r| r.ansatz == a && r.mode == mode).unwrap();
        let (g, d, p) = (row(Mode::Gate), row(Mode::Decomposed), row(Mode::Pulse));
        let (mg, md, mp) = (g.final_mse_median, d.final_mse_median, p.final_mse_median);
        let between = (mp.min(mg) <= md && md <= mp.max(mg)) || (md - mp).abs() <= p.final_mse_std;
        pass &= mp < mg && between;
        parts.push(format!("{a} g {mg:.3} d {md:.3} p {mp:.3}"));
    }
    outcome(pass, format!("median final MSE: {}", parts.join("; ")))
}

fn escape_directions() -> Outcome {
    let cfg = TrainConfig {
        ansatz: "rot_crx".into(),
        ..TrainConfig::default()
    };
    let mut hits = 0;
    let mut converged = 0;
    for seed in 0..10 {
        let mut m = initial_model(&cfg, seed).unwrap();
        let target = seeded_target(&cfg, seed).unwrap().coefficients;
        converge_theta(&mut m, &target, &ConvergeOptions::default()).unwrap();
        let (gt, gl, res) = loss_gradient(&m.with_mode(Mode::Pulse), &target).unwrap();
        let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let (gt, gl) = (norm(&gt), norm(&gl));
        if gt < CONVERGED_GRAD_NORM && res > 1e-3 {
            converged += 1;
            hits += usize::from(gl > 10.0 * gt);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let m = random_model("rot_crx", Mode::Gate, &mut rng);
    let exact = extract_coefficients(&m).unwrap();
    let (_, gl0, _) = loss_gradient(&m.with_mode(Mode::Pulse), &exact).unwrap();
    let gl0 = gl0.iter().map(|x| x * x).sum::<f64>().sqrt();
    outcome(
        hits >= 7 && gl0 < 1e-8,
        format!("escape at {hits}/10 trials ({converged} converged), zero-residual |∇λ| {gl0:.1e}"),
    )
}

fn activation_sweep() -> Outcome {
    let cfg = VarianceSweepConfig::default();
    let mut pass = true;
    let mut parts = Vec::new();
    for a in COMPOSITE {
        let r = coefficient_variance_sweep(&ansatz(a), &cfg).unwrap();
        let (first, last) = (r.active_mean[0], *r.active_mean.last().unwrap());
        pass &= last >= first;
        parts.push(format!("{a} {first:.1} -> {last:.1}"));
    }
    outcome(pass, format!("active count σ²=0 -> 0.008: {}", parts.join(", ")))
}

fn invariance() -> Outcome {
    let at = |s| SamplingConfig {
        sigma2: s,
        ..SamplingConfig::default()
    };
    let (mut worst_fcc, mut worst_dkl) = (0.0f64, 0.0f64);
    for name in ANSATZ_NAMES {
        let a = ansatz(name);
        let f = (fcc(&a, &at(0.0)).unwrap().fcc - fcc(&a, &at(0.008)).unwrap().fcc).abs();
        let e0 = expressibility(&a, &at(0.0), DEFAULT_BINS).unwrap().dkl;
        let e1 = expressibility(&a, &at(0.008), DEFAULT_BINS).unwrap().dkl;
        worst_fcc = worst_fcc.max(f);
        worst_dkl = worst_dkl.max((e0 - e1).abs());
    }
    outcome(
        worst_fcc < 0.1 && worst_dkl < 0.1,
        format!("max |ΔFCC| {worst_fcc:.4}, max |ΔD_KL| {worst_dkl:.4}"),
    )
}

fn distortion_sensitivity() -> Outcome {
    let grid = sigma2_grid(0.008, 8);
    let mut monotone = true;
    let mut baseline = 0.0f64;
    for name in ANSATZ_NAMES {
        let rows = fidelity_distortion_sweep(&ansatz(name), &grid, &SamplingConfig::default()).unwrap();
        baseline = baseline.max((rows[0].fidelity_mean - 1.0).abs()).max(rows[0].trace_mean);
        for w in rows.windows(2) {
            let n = w[0].n_samples as f64;
            let se_f = (w[0].fidelity_std.powi(2) + w[1].fidelity_std.powi(2)).sqrt() / n.sqrt();
            let se_t = (w[0].trace_std.powi(2) + w[1].trace_std.powi(2)).sqrt() / n.sqrt();
            monotone &= w[1].fidelity_mean <= w[0].fidelity_mean + 2.0 * se_f;
            monotone &= w[1].trace_mean >= w[0].trace_mean - 2.0 * se_t;
        }
    }
    outcome(
        monotone && baseline < 1e-12,
        format!("monotone within 2 SE: {monotone}, σ²=0 deviation {baseline:.1e}"),
    )
}

fn determinism() -> Outcome {
    let root = tempfile::tempdir().unwrap();
    let run = |dir: &str| {
        let flags = Overrides {
            ansatz: Some("ry_crz,rot_crx".into()),
            seeds: Some(2),
            steps: Some(20),
            samples: Some(200),
            sigma2_steps: Some(3),
            out: Some(root.path().join(dir)),
            master_seed: Some(11),
            ..Default::default()
        };
        let cfg = resolve(Some(Experiment::Report), &flags).unwrap();
        run_experiment(&cfg).unwrap()
    };
    let (a, b) = (run("a"), run("b"));
    let csvs = |files: &[std::path::PathBuf]| {
        files
            .iter()
            .filter(|p| p.extension().is_some_and(|e| e == "csv"))
            .map(|p| (p.file_name().unwrap().to_owned(), std::fs::read(p).unwrap()))
            .collect::<Vec<_>>()
    };
    let (ca, cb) = (csvs(&a.files), csvs(&b.files));
    let identical = !ca.is_empty() && ca == cb;
    outcome(identical, format!("{} CSVs from `report`, byte-identical: {identical}", ca.len()))
}

fn main() {
    // (name, check, runtime budget in seconds)
    let criteria: [(&str, fn() -> Outcome, Option<f64>); 13] = [
        ("pulse-area closed form", pulse_area_closed_form, Some(1.0)),
        ("pulse-area model equivalence", pulse_area_equivalence, Some(5.0)),
        ("controlled-RX branch algebra", example1_algebra, None),
        ("decomposition fidelity and pulse counts", table_one, None),
        ("spectral correctness", spectral_correctness, None),
        ("gradient correctness", gradient_correctness, None),
        ("Jacobian rank results", rank_results, Some(60.0)),
        ("training mode ordering", training_ordering, Some(900.0)),
        ("escape directions", escape_directions, None),
        ("activation sweep", activation_sweep, None),
        ("FCC and expressibility invariance", invariance, None),
        ("distortion sensitivity", distortion_sensitivity, None),
        ("determinism", determinism, None),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, check, budget)) in criteria.iter().enumerate() {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let o = check();
        let secs = start.elapsed().as_secs_f64();
        let in_time = budget.is_none_or(|b| secs < b);
        let pass = o.pass && in_time;
        failed += usize::from(!pass);
        println!(
            "criterion {:>2} {:<42} {} ({secs:.1} s{}) {}",
            i + 1,
            name,
            if pass { "PASS" } else { "FAIL" },
            budget.map_or(String::new(), |b| format!(", budget {b} s")),
            o.detail
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}

//! Fourier-series targets, the MSE loss and Adam training in the three modes.

use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::diffgeo::{coefficient_jacobian, rank_report, DiffgeoError, Wrt};
use crate::linalg::C64;
use crate::model::{ansatz_by_name, Ansatz, FrequencySpectrum, ModelError, Mode, QfmModel};
use crate::seed::stream;
use crate::spectral::{
    extract_coefficients, mean_std, nyquist_grid, CoefficientVector, SpectralError,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TrainError {
    #[error("loss became non-finite at step {step}")]
    Diverged { step: usize },
    #[error("invalid training configuration: {0}")]
    InvalidConfig(String),
    #[error("model grid has {model} points, target has {target}")]
    GridMismatch { model: usize, target: usize },
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Diffgeo(#[from] DiffgeoError),
}

/// Target Fourier series with its samples on the Nyquist grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetSeries {
    pub coefficients: CoefficientVector,
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
}

impl TargetSeries {
    pub fn from_coefficients(coefficients: CoefficientVector) -> Self {
        let w_max = coefficients.frequencies().iter().map(|w| w.unsigned_abs()).max().unwrap_or(0);
        let grid = crate::spectral::uniform_grid(2 * w_max as usize + 1);
        let values = grid.iter().map(|&x| coefficients.evaluate(x)).collect();
        Self {
            coefficients,
            grid,
            values,
        }
    }
}

/// Draws `c*_ω` uniformly from the unit disk for `ω > 0`, mirrors them to
/// `−ω` by conjugation, and draws a real `c*_0` uniformly from `[−1, 1]`.
pub fn generate_target<R: Rng + ?Sized>(
    spectrum: &FrequencySpectrum,
    rng: &mut R,
) -> Result<TargetSeries, TrainError> {
    nyquist_grid(spectrum)?;
    let freqs = spectrum.integer_frequencies().expect("checked by nyquist_grid");
    let mut coeffs = vec![C64::new(0.0, 0.0); freqs.len()];
    let zero = freqs.binary_search(&0).ok();
    if let Some(i) = zero {
        coeffs[i] = C64::new(rng.random_range(-1.0..=1.0), 0.0);
    }
    for (i, &w) in freqs.iter().enumerate().filter(|(_, &w)| w > 0) {
        let r = rng.random::<f64>().sqrt();
        let phi = rng.random::<f64>() * TAU;
        let c = C64::from_polar(r, phi);
        coeffs[i] = c;
        if let Ok(j) = freqs.binary_search(&-w) {
            coeffs[j] = c.conj();
        }
    }
    let cv = CoefficientVector::new(freqs, coeffs)?;
    Ok(TargetSeries::from_coefficients(cv))
}

/// Mean squared error over the target grid.
pub fn mse_loss(model: &QfmModel, target: &TargetSeries) -> Result<f64, TrainError> {
    let n = nyquist_grid(&model.spectrum())?.len();
    if n != target.grid.len() {
        return Err(TrainError::GridMismatch {
            model: n,
            target: target.grid.len(),
        });
    }
    let f = model.evaluate(&target.grid);
    Ok(mean_sq_err(&f, &target.values))
}

fn mean_sq_err(f: &[f64], y: &[f64]) -> f64 {
    f.iter().zip(y).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / f.len() as f64
}

/// Loss and its gradient with respect to every trainable parameter.
pub fn loss_and_gradient(model: &QfmModel, target: &TargetSeries) -> Result<(f64, Vec<f64>), TrainError> {
    let loss = mse_loss(model, target)?;
    let f = model.evaluate(&target.grid);
    let n = f.len() as f64;
    let grads = model.parameter_gradients(&target.grid);
    let g = grads
        .iter()
        .map(|df| {
            df.iter()
                .zip(f.iter().zip(&target.values))
                .map(|(d, (a, b))| 2.0 * (a - b) * d)
                .sum::<f64>()
                / n
        })
        .collect();
    Ok((loss, g))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamOptions {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamOptions {
    fn default() -> Self {
        Self {
            learning_rate: 0.05,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Adam {
    opts: AdamOptions,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    pub fn new(opts: AdamOptions, n: usize) -> Self {
        Self {
            opts,
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        self.step_with_lr(params, grad, self.opts.learning_rate);
    }

    pub fn step_with_lr(&mut self, params: &mut [f64], grad: &[f64], lr: f64) {
        let AdamOptions { beta1, beta2, epsilon, .. } = self.opts;
        self.t += 1;
        let (c1, c2) = (1.0 - beta1.powi(self.t), 1.0 - beta2.powi(self.t));
        for i in 0..params.len() {
            self.m[i] = beta1 * self.m[i] + (1.0 - beta1) * grad[i];
            self.v[i] = beta2 * self.v[i] + (1.0 - beta2) * grad[i] * grad[i];
            params[i] -= lr * (self.m[i] / c1) / ((self.v[i] / c2).sqrt() + epsilon);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub ansatz: String,
    pub n_qubits: usize,
    pub n_blocks: usize,
    pub mode: Mode,
    pub seeds: Vec<u64>,
    pub steps: usize,
    pub adam: AdamOptions,
    pub master_seed: u64,
    /// Keep λ / decomposition scales at 1 while training θ.
    pub freeze_extensions: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            ansatz: "rot_crx".into(),
            n_qubits: 3,
            n_blocks: 2,
            mode: Mode::Gate,
            seeds: (0..10).collect(),
            steps: 500,
            adam: AdamOptions::default(),
            master_seed: 0,
            freeze_extensions: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        let a = &self.adam;
        if self.steps == 0 {
            return Err(TrainError::InvalidConfig("steps must be at least 1".into()));
        }
        if !(a.learning_rate > 0.0) {
            return Err(TrainError::InvalidConfig("learning rate must be positive".into()));
        }
        if !(0.0 < a.beta1 && a.beta1 < 1.0 && 0.0 < a.beta2 && a.beta2 < 1.0) {
            return Err(TrainError::InvalidConfig("Adam betas must lie in (0, 1)".into()));
        }
        Ok(())
    }

    pub fn build_ansatz(&self) -> Result<Ansatz, TrainError> {
        Ok(ansatz_by_name(&self.ansatz, self.n_qubits)?)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainRun {
    pub seed: u64,
    pub mode: Mode,
    /// Loss before each update, followed by the final loss.
    pub mse: Vec<f64>,
    pub final_params: Vec<f64>,
}

impl TrainRun {
    pub fn final_mse(&self) -> f64 {
        *self.mse.last().expect("at least the initial loss")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainRecord {
    pub ansatz: String,
    pub mode: Mode,
    pub runs: Vec<TrainRun>,
}

/// Label of the per-seed target stream; shared by every mode.
pub fn target_label(ansatz: &str, seed: u64) -> String {
    format!("train/{ansatz}/seed{seed}/target")
}

/// Label of the per-seed θ initialisation stream; shared by every mode.
pub fn init_label(ansatz: &str, seed: u64) -> String {
    format!("train/{ansatz}/seed{seed}/init")
}

/// Runs Adam from the model's current parameters.
pub fn train_model(
    model: &mut QfmModel,
    target: &TargetSeries,
    adam: AdamOptions,
    steps: usize,
    freeze_extensions: bool,
) -> Result<Vec<f64>, TrainError> {
    let mut opt = Adam::new(adam, model.n_trainable());
    let mut params = model.trainable();
    let n_theta = model.theta().len();
    let mut history = Vec::with_capacity(steps + 1);
    for step in 0..steps {
        let (loss, mut grad) = loss_and_gradient(model, target)?;
        if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(TrainError::Diverged { step });
        }
        history.push(loss);
        if freeze_extensions {
            grad[n_theta..].iter_mut().for_each(|g| *g = 0.0);
        }
        opt.step(&mut params, &grad);
        model.set_trainable(&params)?;
    }
    let last = mse_loss(model, target)?;
    if !last.is_finite() {
        return Err(TrainError::Diverged { step: steps });
    }
    history.push(last);
    Ok(history)
}

/// Model for `config` with θ drawn from the seed's initialisation stream.
pub fn initial_model(config: &TrainConfig, seed: u64) -> Result<QfmModel, TrainError> {
    let ansatz = config.build_ansatz()?;
    let mut m = QfmModel::new(&ansatz, config.n_blocks, Mode::Gate)?;
    m.randomize_theta(&mut stream(config.master_seed, &init_label(&config.ansatz, seed)));
    Ok(m.with_mode(config.mode))
}

/// Target for one seed of `config`.
pub fn seeded_target(config: &TrainConfig, seed: u64) -> Result<TargetSeries, TrainError> {
    let ansatz = config.build_ansatz()?;
    let m = QfmModel::new(&ansatz, config.n_blocks, Mode::Gate)?;
    generate_target(
        &m.spectrum(),
        &mut stream(config.master_seed, &target_label(&config.ansatz, seed)),
    )
}

/// Trains every seed of `config` against `target`.
pub fn train(config: &TrainConfig, target: &TargetSeries) -> Result<TrainRecord, TrainError> {
    train_with_targets(config, |_| Ok(target.clone()))
}

fn train_with_targets<F>(config: &TrainConfig, target_for: F) -> Result<TrainRecord, TrainError>
where
    F: Fn(u64) -> Result<TargetSeries, TrainError> + Sync,
{
    config.validate()?;
    let runs = config
        .seeds
        .par_iter()
        .map(|&seed| {
            let target = target_for(seed)?;
            let mut m = initial_model(config, seed)?;
            let mse = train_model(&mut m, &target, config.adam, config.steps, config.freeze_extensions)?;
            Ok(TrainRun {
                seed,
                mode: config.mode,
                mse,
                final_params: m.trainable(),
            })
        })
        .collect::<Result<Vec<_>, TrainError>>()?;
    Ok(TrainRecord {
        ansatz: config.ansatz.clone(),
        mode: config.mode,
        runs,
    })
}

/// Trains `config` with each seed's own target from [`seeded_target`].
pub fn train_seeded(config: &TrainConfig) -> Result<TrainRecord, TrainError> {
    train_with_targets(config, |seed| seeded_target(config, seed))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub ansatz: String,
    pub mode: Mode,
    pub pulse_param_count: usize,
    pub final_mse: Vec<f64>,
    pub final_mse_mean: f64,
    pub final_mse_std: f64,
    pub final_mse_median: f64,
    /// Ranks at the first seed's initial point.
    pub rank_theta: usize,
    pub rank_ext: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub rows: Vec<ComparisonRow>,
    pub records: Vec<TrainRecord>,
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    match n {
        0 => f64::NAN,
        _ if n % 2 == 1 => v[n / 2],
        _ => 0.5 * (v[n / 2 - 1] + v[n / 2]),
    }
}

/// Trains every ansatz in each of `modes` for all seeds against shared seeded
/// targets. Rows are ordered by pulse-parameter count, then mode.
pub fn run_comparison(ansatze: &[String], modes: &[Mode], base: &TrainConfig) -> Result<Comparison, TrainError> {
    let mut tasks: Vec<(Ansatz, Mode)> = Vec::new();
    for name in ansatze {
        let a = ansatz_by_name(name, base.n_qubits)?;
        for &mode in modes {
            tasks.push((a.clone(), mode));
        }
    }
    tasks.sort_by_key(|(a, m)| (a.pulse_params_per_block(), a.name().to_string(), *m));
    let results = tasks
        .iter()
        .map(|(a, mode)| {
            let cfg = TrainConfig {
                ansatz: a.name().to_string(),
                mode: *mode,
                ..base.clone()
            };
            let record = train_seeded(&cfg)?;
            let first = base.seeds.first().copied().unwrap_or(0);
            let report = rank_report(&initial_model(&cfg, first)?)?;
            let finals: Vec<f64> = record.runs.iter().map(TrainRun::final_mse).collect();
            let (mean, std) = mean_std(&finals);
            let row = ComparisonRow {
                ansatz: a.name().to_string(),
                mode: *mode,
                pulse_param_count: a.pulse_params_per_block() * base.n_blocks,
                final_mse_median: median(&finals),
                final_mse: finals,
                final_mse_mean: mean,
                final_mse_std: std,
                rank_theta: report.rank_theta,
                rank_ext: report.rank_ext,
            };
            Ok((row, record))
        })
        .collect::<Result<Vec<_>, TrainError>>()?;
    let (rows, records) = results.into_iter().unzip();
    Ok(Comparison { rows, records })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergeOptions {
    pub adam: AdamOptions,
    pub adam_steps: usize,
    /// Learning rate is `lr / (1 + step / decay_steps)`.
    pub decay_steps: f64,
    pub polish_iterations: usize,
    pub grad_tol: f64,
}

impl Default for ConvergeOptions {
    fn default() -> Self {
        Self {
            adam: AdamOptions::default(),
            adam_steps: 2000,
            decay_steps: 250.0,
            polish_iterations: 200,
            grad_tol: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Converged {
    pub loss: f64,
    pub grad_norm: f64,
}

/// Drives a model's θ to a stationary point of the coefficient loss: Adam with
/// a decaying step, then damped Newton steps on a finite-difference Hessian of
/// the analytic gradient. Extensions, if any, stay fixed.
pub fn converge_theta(
    model: &mut QfmModel,
    target: &CoefficientVector,
    opts: &ConvergeOptions,
) -> Result<Converged, TrainError> {
    let series = TargetSeries::from_coefficients(target.clone());
    let n_theta = model.theta().len();
    let mut opt = Adam::new(opts.adam, n_theta);
    let mut theta = model.theta().to_vec();
    for step in 0..opts.adam_steps {
        let (loss, grad) = loss_and_gradient(model, &series)?;
        if !loss.is_finite() {
            return Err(TrainError::Diverged { step });
        }
        let lr = opts.adam.learning_rate / (1.0 + step as f64 / opts.decay_steps);
        opt.step_with_lr(&mut theta, &grad[..n_theta], lr);
        model.set_theta(&theta)?;
    }
    let (mut loss, mut g) = coefficient_loss_gradient(model, target)?;
    let mut mu = 1e-4;
    for _ in 0..opts.polish_iterations {
        if g.norm() < opts.grad_tol {
            break;
        }
        let h = theta_hessian(model, target, 1e-5)?;
        let mut accepted = false;
        for _ in 0..40 {
            let lhs = &h + DMatrix::identity(n_theta, n_theta) * mu;
            let Some(delta) = lhs.cholesky().map(|c| c.solve(&(-&g))) else {
                mu = (mu * 10.0).max(1e-8);
                continue;
            };
            let trial: Vec<f64> = model.theta().iter().zip(delta.iter()).map(|(t, d)| t + d).collect();
            let mut cand = model.clone();
            cand.set_theta(&trial)?;
            let (l_new, g_new) = coefficient_loss_gradient(&cand, target)?;
            let flat = l_new <= loss + 1e-13 * loss.abs() && g_new.norm() < g.norm();
            if l_new < loss || flat {
                *model = cand;
                loss = l_new;
                g = g_new;
                mu = (mu / 3.0).max(1e-12);
                accepted = true;
                break;
            }
            mu = (mu * 4.0).max(1e-8);
        }
        if !accepted {
            break;
        }
    }
    Ok(Converged {
        loss,
        grad_norm: g.norm(),
    })
}

/// `Σ_ω |c_ω − c*_ω|²` and its θ-gradient `2 J_θᵀ r`.
pub fn coefficient_loss_gradient(
    model: &QfmModel,
    target: &CoefficientVector,
) -> Result<(f64, DVector<f64>), TrainError> {
    let r = DVector::from_vec(extract_coefficients(model)?.sub(target)?.to_real());
    let j = coefficient_jacobian(model, Wrt::Theta)?;
    Ok((r.norm_squared(), 2.0 * j.transpose() * r))
}

fn theta_hessian(model: &QfmModel, target: &CoefficientVector, h: f64) -> Result<DMatrix<f64>, TrainError> {
    let n = model.theta().len();
    let mut hess = DMatrix::zeros(n, n);
    for i in 0..n {
        let mut column = DVector::zeros(n);
        for (sign, step) in [(1.0, h), (-1.0, -h)] {
            let mut m = model.clone();
            let mut t = model.theta().to_vec();
            t[i] += step;
            m.set_theta(&t)?;
            column += coefficient_loss_gradient(&m, target)?.1 * sign;
        }
        hess.set_column(i, &(column / (2.0 * h)));
    }
    Ok((&hess + hess.transpose()) * 0.5)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Encoding;
    use crate::oracles::central_differences;
    use crate::spectral::coefficient_mse;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn spectrum3() -> FrequencySpectrum {
        FrequencySpectrum::from_encoding(&Encoding::ternary(3), 1)
    }

    #[test]
    fn targets_are_hermitian_and_bounded() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let t = generate_target(&spectrum3(), &mut rng).unwrap();
        assert_eq!(t.coefficients.hermitian_defect(), 0.0);
        assert_eq!(t.grid.len(), 27);
        for &x in &t.grid {
            let full: C64 = t
                .coefficients
                .frequencies()
                .iter()
                .zip(t.coefficients.coefficients())
                .map(|(&w, c)| c * C64::from_polar(1.0, w as f64 * x))
                .sum();
            assert!(full.im.abs() < 1e-12);
        }
        let spec1 = FrequencySpectrum::from_encoding(&Encoding::ternary(1), 1);
        let mut sum = 0.0;
        let n = 100_000;
        for _ in 0..n {
            let t = generate_target(&spec1, &mut rng).unwrap();
            let c = t.coefficients.get(1).unwrap();
            assert!(c.norm() <= 1.0);
            sum += c.norm_sqr();
        }
        assert!((sum / n as f64 - 0.5).abs() < 0.005);
    }

    #[test]
    fn loss_examples_and_parseval() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = ansatz_by_name("rot_cry", 3).unwrap();
        let mut m = QfmModel::new(&a, 2, Mode::Gate).unwrap();
        m.randomize_theta(&mut rng);
        let own = TargetSeries::from_coefficients(extract_coefficients(&m).unwrap());
        assert!(mse_loss(&m, &own).unwrap() < 1e-24);
        for _ in 0..10 {
            m.randomize_theta(&mut rng);
            let t = generate_target(&m.spectrum(), &mut rng).unwrap();
            let grid = mse_loss(&m, &t).unwrap();
            let coef = coefficient_mse(&extract_coefficients(&m).unwrap(), &t.coefficients).unwrap();
            assert!((grid - coef).abs() < 1e-8);
        }
        let t1 = generate_target(&FrequencySpectrum::from_encoding(&Encoding::ternary(1), 1), &mut rng).unwrap();
        assert!(matches!(mse_loss(&m, &t1), Err(TrainError::GridMismatch { .. })));
    }

    #[test]
    fn loss_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for mode in Mode::ALL {
            for name in ["ry_cx", "rot_crx"] {
                let mut m = QfmModel::new(&ansatz_by_name(name, 3).unwrap(), 2, mode).unwrap();
                m.randomize_theta(&mut rng);
                let t = generate_target(&m.spectrum(), &mut rng).unwrap();
                let (_, g) = loss_and_gradient(&m, &t).unwrap();
                let fd = central_differences(
                    |p| {
                        let mut mm = m.clone();
                        mm.set_trainable(p).unwrap();
                        vec![mse_loss(&mm, &t).unwrap()]
                    },
                    &m.trainable(),
                    1e-5,
                );
                for (a, b) in g.iter().zip(fd.iter().map(|v| v[0])) {
                    assert!((a - b).abs() < 1e-6);
                }
            }
        }
    }

    #[test]
    fn constant_target_is_fit() {
        let coeffs: Vec<C64> = (-13..=13)
            .map(|w| if w == 0 { C64::new(0.4, 0.0) } else { C64::new(0.0, 0.0) })
            .collect();
        let t = TargetSeries::from_coefficients(CoefficientVector::new((-13..=13).collect(), coeffs).unwrap());
        let cfg = TrainConfig {
            ansatz: "rot_cry".into(),
            seeds: vec![0],
            ..Default::default()
        };
        let rec = train(&cfg, &t).unwrap();
        assert_eq!(rec.runs[0].mse.len(), 501);
        assert!(rec.runs[0].final_mse() < 1e-4, "{}", rec.runs[0].final_mse());
        assert!(rec.runs[0].mse.iter().all(|&l| l >= 0.0));
    }

    #[test]
    fn frozen_pulse_follows_gate_trajectory() {
        let base = TrainConfig {
            ansatz: "rot_crx".into(),
            seeds: vec![4],
            steps: 40,
            ..Default::default()
        };
        let t = seeded_target(&base, 4).unwrap();
        let gate = train(&base, &t).unwrap();
        for mode in [Mode::Pulse, Mode::Decomposed] {
            let frozen = train(&TrainConfig { mode, freeze_extensions: true, ..base.clone() }, &t).unwrap();
            for (a, b) in gate.runs[0].mse.iter().zip(&frozen.runs[0].mse) {
                assert!((a - b).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn training_is_deterministic_and_targets_shared() {
        let cfg = TrainConfig {
            ansatz: "ry_crz".into(),
            seeds: vec![0, 1],
            steps: 5,
            mode: Mode::Pulse,
            ..Default::default()
        };
        let a = train_seeded(&cfg).unwrap();
        let b = train_seeded(&cfg).unwrap();
        assert_eq!(a, b);
        let g = TrainConfig { mode: Mode::Gate, ..cfg.clone() };
        assert_eq!(seeded_target(&g, 1).unwrap(), seeded_target(&cfg, 1).unwrap());
        assert!(TrainConfig { steps: 0, ..cfg.clone() }.validate().is_err());
        let mut adam = cfg.adam;
        adam.beta1 = 1.0;
        assert!(TrainConfig { adam, ..cfg }.validate().is_err());
    }

    #[test]
    fn divergence_is_reported() {
        let cfg = TrainConfig {
            ansatz: "basis_rx".into(),
            seeds: vec![0],
            steps: 3,
            ..Default::default()
        };
        let mut t = seeded_target(&cfg, 0).unwrap();
        t.values[0] = f64::NAN;
        assert_eq!(train(&cfg, &t), Err(TrainError::Diverged { step: 0 }));
    }

    #[test]
    fn median_values() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    }
}

//! Fourier coefficients of model outputs and coefficient-variance sweeps.

use std::f64::consts::TAU;

use rayon::prelude::*;
use thiserror::Error;

use crate::linalg::C64;
use crate::model::{Ansatz, FrequencySpectrum, ModelError, Mode, QfmModel};
use crate::pulse::{sample_lambda_distortion, PulseError};
use crate::seed::stream;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpectralError {
    #[error("spectrum contains non-integer frequency {0}")]
    NonIntegerSpectrum(f64),
    #[error("coefficient vectors are indexed by different frequency sets")]
    SpectrumMismatch,
    #[error("need at least {need} parameter samples, got {got}")]
    TooFewSamples { need: usize, got: usize },
    #[error("{got} values for a grid of {expected} points")]
    GridMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Pulse(#[from] PulseError),
}

/// `n` equispaced points `2πk/n` on `[0, 2π)`.
pub fn uniform_grid(n: usize) -> Vec<f64> {
    (0..n).map(|k| TAU * k as f64 / n as f64).collect()
}

/// Smallest exact sampling grid for an integer spectrum: `2·ω_max + 1` points.
pub fn nyquist_grid(spectrum: &FrequencySpectrum) -> Result<Vec<f64>, SpectralError> {
    let freqs = integer_frequencies(spectrum)?;
    let w_max = freqs.iter().map(|w| w.unsigned_abs()).max().unwrap_or(0) as usize;
    Ok(uniform_grid(2 * w_max + 1))
}

fn integer_frequencies(spectrum: &FrequencySpectrum) -> Result<Vec<i64>, SpectralError> {
    spectrum.integer_frequencies().ok_or_else(|| {
        let bad = spectrum
            .frequencies()
            .iter()
            .copied()
            .find(|w| (w - w.round()).abs() >= 1e-9)
            .unwrap_or(f64::NAN);
        SpectralError::NonIntegerSpectrum(bad)
    })
}

/// Fourier coefficients indexed by a sorted integer frequency set.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientVector {
    frequencies: Vec<i64>,
    coefficients: Vec<C64>,
}

impl CoefficientVector {
    pub fn new(frequencies: Vec<i64>, coefficients: Vec<C64>) -> Result<Self, SpectralError> {
        if frequencies.len() != coefficients.len() || !frequencies.windows(2).all(|w| w[0] < w[1]) {
            return Err(SpectralError::SpectrumMismatch);
        }
        Ok(Self {
            frequencies,
            coefficients,
        })
    }

    pub fn zeros(frequencies: Vec<i64>) -> Self {
        let n = frequencies.len();
        Self {
            frequencies,
            coefficients: vec![C64::new(0.0, 0.0); n],
        }
    }

    /// DFT `c_ω = (1/N) Σ_k f(x_k) e^{−iωx_k}` of samples on `uniform_grid(N)`.
    pub fn from_samples(frequencies: Vec<i64>, values: &[f64]) -> Self {
        let n = values.len() as f64;
        let coefficients = frequencies
            .iter()
            .map(|&w| {
                values
                    .iter()
                    .enumerate()
                    .map(|(k, &f)| {
                        let phase = -TAU * ((w * k as i64).rem_euclid(values.len() as i64)) as f64 / n;
                        C64::from_polar(f, phase)
                    })
                    .sum::<C64>()
                    / n
            })
            .collect();
        Self {
            frequencies,
            coefficients,
        }
    }

    pub fn frequencies(&self) -> &[i64] {
        &self.frequencies
    }

    pub fn coefficients(&self) -> &[C64] {
        &self.coefficients
    }

    pub fn len(&self) -> usize {
        self.frequencies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frequencies.is_empty()
    }

    pub fn get(&self, omega: i64) -> Option<C64> {
        self.frequencies
            .binary_search(&omega)
            .ok()
            .map(|i| self.coefficients[i])
    }

    /// `Σ_ω c_ω e^{iωx}`, real part.
    pub fn evaluate(&self, x: f64) -> f64 {
        self.frequencies
            .iter()
            .zip(&self.coefficients)
            .map(|(&w, c)| (c * C64::from_polar(1.0, w as f64 * x)).re)
            .sum()
    }

    /// Largest `|c_{−ω} − conj(c_ω)|`, including `|Im c_0|`.
    pub fn hermitian_defect(&self) -> f64 {
        self.frequencies
            .iter()
            .zip(&self.coefficients)
            .map(|(&w, c)| match self.get(-w) {
                Some(m) => (m - c.conj()).norm(),
                None => f64::INFINITY,
            })
            .fold(0.0, f64::max)
    }

    /// Real embedding `(Re c_ω …, Im c_ω …)`.
    pub fn to_real(&self) -> Vec<f64> {
        self.coefficients
            .iter()
            .map(|c| c.re)
            .chain(self.coefficients.iter().map(|c| c.im))
            .collect()
    }

    fn check_same(&self, other: &Self) -> Result<(), SpectralError> {
        if self.frequencies != other.frequencies {
            return Err(SpectralError::SpectrumMismatch);
        }
        Ok(())
    }

    pub fn sub(&self, other: &Self) -> Result<Self, SpectralError> {
        self.check_same(other)?;
        Ok(Self {
            frequencies: self.frequencies.clone(),
            coefficients: self
                .coefficients
                .iter()
                .zip(&other.coefficients)
                .map(|(a, b)| a - b)
                .collect(),
        })
    }

    pub fn norm_sqr(&self) -> f64 {
        self.coefficients.iter().map(C64::norm_sqr).sum()
    }
}

/// Frequencies of a model as integers.
pub fn model_frequencies(model: &QfmModel) -> Result<Vec<i64>, SpectralError> {
    integer_frequencies(&model.spectrum())
}

/// Evaluates the model on its Nyquist grid and returns the DFT coefficients.
pub fn extract_coefficients(model: &QfmModel) -> Result<CoefficientVector, SpectralError> {
    let spectrum = model.spectrum();
    let grid = nyquist_grid(&spectrum)?;
    let values = model.evaluate(&grid);
    Ok(CoefficientVector::from_samples(integer_frequencies(&spectrum)?, &values))
}

/// `Σ_ω |c_ω − c*_ω|²`.
pub fn coefficient_mse(c: &CoefficientVector, target: &CoefficientVector) -> Result<f64, SpectralError> {
    Ok(c.sub(target)?.norm_sqr())
}

/// Per-frequency total variance `E|c − E c|²` over a sample of coefficient vectors.
pub fn coefficient_variances(samples: &[CoefficientVector]) -> Result<Vec<f64>, SpectralError> {
    let first = samples.first().ok_or(SpectralError::TooFewSamples { need: 1, got: 0 })?;
    for s in samples {
        first.check_same(s)?;
    }
    let n = samples.len() as f64;
    Ok((0..first.len())
        .map(|j| {
            let mean = samples.iter().map(|s| s.coefficients[j]).sum::<C64>() / n;
            samples
                .iter()
                .map(|s| (s.coefficients[j] - mean).norm_sqr())
                .sum::<f64>()
                / n
        })
        .collect())
}

/// `steps` equispaced variances from 0 to `max` inclusive.
pub fn sigma2_grid(max: f64, steps: usize) -> Vec<f64> {
    match steps {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..steps).map(|i| max * i as f64 / (steps - 1) as f64).collect(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VarianceSweepConfig {
    pub n_blocks: usize,
    pub sigma2_grid: Vec<f64>,
    pub n_param_samples: usize,
    pub seeds: Vec<u64>,
    pub tau: f64,
    pub master_seed: u64,
}

impl Default for VarianceSweepConfig {
    fn default() -> Self {
        Self {
            n_blocks: 2,
            sigma2_grid: sigma2_grid(0.008, 8),
            n_param_samples: 4000,
            seeds: (0..10).collect(),
            tau: 5e-6,
            master_seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VarianceSweepResult {
    pub ansatz: String,
    pub sigma2: Vec<f64>,
    pub frequencies: Vec<i64>,
    pub seeds: Vec<u64>,
    /// `[seed][sigma2][ω]`.
    pub variances: Vec<Vec<Vec<f64>>>,
    /// `[seed][sigma2]`.
    pub active_counts: Vec<Vec<usize>>,
    /// Mean over seeds, per sigma2.
    pub active_mean: Vec<f64>,
    /// Sample standard deviation over seeds, per sigma2.
    pub active_std: Vec<f64>,
}

/// Mean and sample standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Pulse-mode copy of `template` with uniform θ and λ ~ Normal(1, sigma2)
/// drawn from streams labelled by `label`. The same label gives the same θ
/// and the same standard-normal draws for every sigma2.
pub fn distorted_sample(
    template: &QfmModel,
    master_seed: u64,
    label: &str,
    sigma2: f64,
) -> Result<QfmModel, SpectralError> {
    let mut m = template.with_mode(Mode::Pulse);
    m.randomize_theta(&mut stream(master_seed, &format!("{label}/theta")));
    let lambda = sample_lambda_distortion(
        &mut stream(master_seed, &format!("{label}/lambda")),
        sigma2,
        m.lambda().len(),
    )?;
    m.set_lambda(&lambda)?;
    Ok(m)
}

/// For each seed and sigma2, samples parameter sets, extracts coefficients,
/// and counts frequencies whose variance exceeds `tau`.
pub fn coefficient_variance_sweep(
    ansatz: &Ansatz,
    cfg: &VarianceSweepConfig,
) -> Result<VarianceSweepResult, SpectralError> {
    if cfg.n_param_samples < 2 {
        return Err(SpectralError::TooFewSamples {
            need: 2,
            got: cfg.n_param_samples,
        });
    }
    let template = QfmModel::new(ansatz, cfg.n_blocks, Mode::Pulse)?;
    let frequencies = model_frequencies(&template)?;
    let tasks: Vec<(usize, usize)> = (0..cfg.seeds.len())
        .flat_map(|s| (0..cfg.sigma2_grid.len()).map(move |g| (s, g)))
        .collect();
    let per_task: Vec<Vec<f64>> = tasks
        .par_iter()
        .map(|&(s, g)| {
            let samples = (0..cfg.n_param_samples)
                .map(|i| {
                    let label = format!("variance/{}/seed{}/sample{i}", ansatz.name(), cfg.seeds[s]);
                    let m = distorted_sample(&template, cfg.master_seed, &label, cfg.sigma2_grid[g])?;
                    extract_coefficients(&m)
                })
                .collect::<Result<Vec<_>, _>>()?;
            coefficient_variances(&samples)
        })
        .collect::<Result<_, _>>()?;
    let mut variances = vec![Vec::with_capacity(cfg.sigma2_grid.len()); cfg.seeds.len()];
    for ((s, _), v) in tasks.iter().zip(per_task) {
        variances[*s].push(v);
    }
    let active_counts: Vec<Vec<usize>> = variances
        .iter()
        .map(|per_sigma| {
            per_sigma
                .iter()
                .map(|v| v.iter().filter(|&&x| x > cfg.tau).count())
                .collect()
        })
        .collect();
    let (active_mean, active_std) = (0..cfg.sigma2_grid.len())
        .map(|g| {
            let counts: Vec<f64> = active_counts.iter().map(|c| c[g] as f64).collect();
            mean_std(&counts)
        })
        .unzip();
    Ok(VarianceSweepResult {
        ansatz: ansatz.name().to_string(),
        sigma2: cfg.sigma2_grid.clone(),
        frequencies,
        seeds: cfg.seeds.clone(),
        variances,
        active_counts,
        active_mean,
        active_std,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ansatz_by_name, Encoding, Layer};
    use crate::gates::{DecompositionRule, GateKind, SubAngle, SubGate};
    use crate::model::GatePlacement;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_model(seed: u64) -> QfmModel {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let name = crate::model::ANSATZ_NAMES[seed as usize % 6];
        let mut m = QfmModel::new(&ansatz_by_name(name, 3).unwrap(), 2, Mode::Gate).unwrap();
        m.randomize_theta(&mut rng);
        m
    }

    #[test]
    fn grids() {
        let s = QfmModel::new(&ansatz_by_name("basis_rx", 3).unwrap(), 2, Mode::Gate)
            .unwrap()
            .spectrum();
        assert_eq!(nyquist_grid(&s).unwrap().len(), 27);
        let one = FrequencySpectrum::from_encoding(&Encoding::ternary(1), 1);
        let g = nyquist_grid(&one).unwrap();
        assert_eq!(g.len(), 3);
        assert!((g[1] - TAU / 3.0).abs() < 1e-15 && (g[2] - 2.0 * TAU / 3.0).abs() < 1e-15);
        let frac = FrequencySpectrum::from_encoding(&Encoding::new(vec![0.5]), 1);
        assert!(matches!(nyquist_grid(&frac), Err(SpectralError::NonIntegerSpectrum(_))));
        assert_eq!(sigma2_grid(0.008, 8).len(), 8);
        assert_eq!(sigma2_grid(0.008, 8)[7], 0.008);
    }

    #[test]
    fn cosine_and_constant() {
        let a = crate::model::Ansatz::new("empty", 1, vec![]).unwrap();
        let m = QfmModel::new(&a, 2, Mode::Gate).unwrap();
        let c = extract_coefficients(&m).unwrap();
        assert_eq!(c.frequencies(), &[-1, 0, 1]);
        assert!((c.get(1).unwrap() - C64::new(0.5, 0.0)).norm() < 1e-15);
        assert!((c.get(-1).unwrap() - C64::new(0.5, 0.0)).norm() < 1e-15);
        assert!(c.get(0).unwrap().norm() < 1e-15);
        let k = CoefficientVector::from_samples(vec![-2, -1, 0, 1, 2], &[0.3; 5]);
        assert!((k.get(0).unwrap() - C64::new(0.3, 0.0)).norm() < 1e-15);
        for w in [-2, -1, 1, 2] {
            assert!(k.get(w).unwrap().norm() < 1e-15);
        }
    }

    #[test]
    fn reconstruction_hermiticity_and_parseval() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for seed in 0..12 {
            let m = random_model(seed);
            let c = extract_coefficients(&m).unwrap();
            assert!(c.hermitian_defect() < 1e-9);
            for _ in 0..50 {
                let x = rng.random_range(0.0..TAU);
                assert!((c.evaluate(x) - m.forward(x)).abs() < 1e-8);
            }
            let t = extract_coefficients(&random_model(seed + 100)).unwrap();
            let grid = uniform_grid(27);
            let grid_mse = grid
                .iter()
                .map(|&x| (c.evaluate(x) - t.evaluate(x)).powi(2))
                .sum::<f64>()
                / 27.0;
            assert!((grid_mse - coefficient_mse(&c, &t).unwrap()).abs() < 1e-8);
        }
        assert_eq!(coefficient_mse(&CoefficientVector::zeros(vec![0]), &CoefficientVector::zeros(vec![0])).unwrap(), 0.0);
        assert!(coefficient_mse(&CoefficientVector::zeros(vec![0]), &CoefficientVector::zeros(vec![1])).is_err());
    }

    #[test]
    fn oversampled_energy_stays_in_spectrum() {
        for seed in 0..6 {
            let m = random_model(seed);
            let grid = uniform_grid(4 * 27);
            let values = m.evaluate(&grid);
            let all: Vec<i64> = (-54..54).collect();
            let c = CoefficientVector::from_samples(all, &values);
            let outside: f64 = c
                .frequencies()
                .iter()
                .zip(c.coefficients())
                .filter(|(w, _)| w.abs() > 13)
                .map(|(_, c)| c.norm_sqr())
                .sum();
            assert!(outside < 1e-9);
        }
    }

    #[test]
    fn one_parameter_coefficients_are_low_degree_trig_polynomials() {
        // θ enters twice (RY(2θ) then RX(θ)), so each c_ω(θ) is a trig polynomial of degree ≤ 3
        let rule = DecompositionRule::custom(
            "rx_ry",
            1,
            1,
            vec![
                SubGate::rot(GateKind::Ry, SubAngle::Linear { param: 0, coeff: 2.0 }, 0),
                SubGate::rot(GateKind::Rx, SubAngle::Linear { param: 0, coeff: 1.0 }, 0),
            ],
        )
        .unwrap();
        let a = crate::model::Ansatz::new("toy", 1, vec![GatePlacement::custom(rule, &[0])]).unwrap();
        let mut m = QfmModel::from_layers(
            1,
            vec![Layer::Encoding, Layer::Trainable(a)],
            Encoding::ternary(1),
            Mode::Gate,
            0,
        )
        .unwrap();
        let n = 16;
        let samples: Vec<CoefficientVector> = (0..n)
            .map(|k| {
                m.set_theta(&[TAU * k as f64 / n as f64]).unwrap();
                extract_coefficients(&m).unwrap()
            })
            .collect();
        for j in 0..3 {
            let series: Vec<C64> = samples.iter().map(|s| s.coefficients()[j]).collect();
            // DFT in θ; harmonics above 3 must vanish
            for h in 4..=(n / 2) {
                let amp: C64 = series
                    .iter()
                    .enumerate()
                    .map(|(k, c)| c * C64::from_polar(1.0, -TAU * (h * k) as f64 / n as f64))
                    .sum::<C64>()
                    / n as f64;
                assert!(amp.norm() < 1e-7, "ω index {j} harmonic {h}");
            }
        }
    }

    #[test]
    fn variance_of_constant_stream_is_zero() {
        let c = CoefficientVector::from_samples(vec![-1, 0, 1], &[0.2, 0.5, -0.1]);
        let v = coefficient_variances(&[c.clone(), c.clone(), c]).unwrap();
        assert!(v.iter().all(|&x| x < 1e-30));
    }

    #[test]
    fn small_sweep_shapes_and_baseline() {
        let a = ansatz_by_name("ry_crz", 3).unwrap();
        let cfg = VarianceSweepConfig {
            sigma2_grid: vec![0.0, 0.008],
            n_param_samples: 40,
            seeds: vec![0, 1],
            ..Default::default()
        };
        let r = coefficient_variance_sweep(&a, &cfg).unwrap();
        assert_eq!(r.variances.len(), 2);
        assert_eq!(r.variances[0].len(), 2);
        assert_eq!(r.variances[0][0].len(), 27);
        assert!(r.active_counts.iter().flatten().all(|&c| c <= 27));
        // σ² = 0 equals a plain gate-mode sample with the same θ streams
        let gate = QfmModel::new(&a, 2, Mode::Gate).unwrap();
        let samples: Vec<CoefficientVector> = (0..40)
            .map(|i| {
                let mut m = gate.clone();
                m.randomize_theta(&mut stream(0, &format!("variance/ry_crz/seed0/sample{i}/theta")));
                extract_coefficients(&m).unwrap()
            })
            .collect();
        let v = coefficient_variances(&samples).unwrap();
        for (a, b) in v.iter().zip(&r.variances[0][0]) {
            assert!((a - b).abs() < 1e-12);
        }
        let again = coefficient_variance_sweep(&a, &cfg).unwrap();
        assert_eq!(again, r);
        assert!(coefficient_variance_sweep(&a, &VarianceSweepConfig { n_param_samples: 1, ..cfg }).is_err());
    }
}

//! Coefficient correlation, expressibility and distortion sensitivity.

use std::f64::consts::TAU;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use thiserror::Error;

use crate::linalg::{fidelity, trace_distance, LinalgError, StateVector, C64};
use crate::model::{Ansatz, ModelError, Mode, QfmModel};
use crate::pulse::{sample_lambda_distortion, PulseError};
use crate::seed::stream;
use crate::spectral::{distorted_sample, extract_coefficients, mean_std, CoefficientVector, SpectralError};

/// Coefficient streams with variance at or below this are treated as constant.
pub const DEGENERATE_VARIANCE: f64 = 1e-24;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("need at least {need} samples, got {got}")]
    TooFewSamples { need: usize, got: usize },
    #[error("need at least one histogram bin")]
    NoBins,
    #[error("negative variance {0} in grid")]
    NegativeVariance(f64),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Pulse(#[from] PulseError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Magnitude of the complex Pearson correlation, `None` if either stream is constant.
pub fn pearson(a: &[C64], b: &[C64]) -> Option<f64> {
    let n = a.len().min(b.len()) as f64;
    let ma = a.iter().sum::<C64>() / n;
    let mb = b.iter().sum::<C64>() / n;
    let (mut cov, mut va, mut vb) = (C64::new(0.0, 0.0), 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (da, db) = (x - ma, y - mb);
        cov += da * db.conj();
        va += da.norm_sqr();
        vb += db.norm_sqr();
    }
    if va / n <= DEGENERATE_VARIANCE || vb / n <= DEGENERATE_VARIANCE {
        return None;
    }
    Some((cov.norm() / (va * vb).sqrt()).min(1.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct FccResult {
    pub frequencies: Vec<i64>,
    /// `|r(ω, ω′)|`, zero for pairs involving a degenerate coefficient.
    pub correlations: Vec<Vec<f64>>,
    pub fcc: f64,
    /// Frequencies whose coefficient did not vary over the sample.
    pub degenerate: Vec<i64>,
}

/// Mean `|r|` over all ordered frequency pairs.
pub fn fcc_from_samples(samples: &[CoefficientVector]) -> Result<FccResult, MetricsError> {
    if samples.len() < 3 {
        return Err(MetricsError::TooFewSamples {
            need: 3,
            got: samples.len(),
        });
    }
    let frequencies = samples[0].frequencies().to_vec();
    if samples.iter().any(|s| s.frequencies() != frequencies.as_slice()) {
        return Err(SpectralError::SpectrumMismatch.into());
    }
    let k = frequencies.len();
    let streams: Vec<Vec<C64>> = (0..k)
        .map(|j| samples.iter().map(|s| s.coefficients()[j]).collect())
        .collect();
    let mut correlations = vec![vec![0.0; k]; k];
    let mut degenerate = Vec::new();
    for i in 0..k {
        if pearson(&streams[i], &streams[i]).is_none() {
            degenerate.push(frequencies[i]);
        }
        for j in i..k {
            let r = pearson(&streams[i], &streams[j]).unwrap_or(0.0);
            correlations[i][j] = r;
            correlations[j][i] = r;
        }
    }
    let fcc = correlations.iter().flatten().sum::<f64>() / (k * k) as f64;
    Ok(FccResult {
        frequencies,
        correlations,
        fcc,
        degenerate,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplingConfig {
    pub n_blocks: usize,
    pub n_samples: usize,
    pub sigma2: f64,
    pub master_seed: u64,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        Self {
            n_blocks: 2,
            n_samples: 4000,
            sigma2: 0.0,
            master_seed: 0,
        }
    }
}

/// FCC of the pulse-realised ansatz with λ ~ Normal(1, sigma2). Parameter
/// draws depend only on the seed and sample index, not on sigma2.
pub fn fcc(ansatz: &Ansatz, cfg: &SamplingConfig) -> Result<FccResult, MetricsError> {
    let template = QfmModel::new(ansatz, cfg.n_blocks, Mode::Pulse)?;
    let samples = (0..cfg.n_samples)
        .into_par_iter()
        .map(|i| {
            let label = format!("fcc/{}/sample{i}", ansatz.name());
            let m = distorted_sample(&template, cfg.master_seed, &label, cfg.sigma2)?;
            extract_coefficients(&m)
        })
        .collect::<Result<Vec<_>, _>>()?;
    fcc_from_samples(&samples)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExpressibilityResult {
    /// Normalised fidelity histogram.
    pub histogram: Vec<f64>,
    /// Haar bin probabilities.
    pub haar: Vec<f64>,
    pub dkl: f64,
}

pub const DEFAULT_BINS: usize = 75;
pub const HISTOGRAM_SMOOTHING: f64 = 1e-9;

/// Probability that a Haar-random pair in dimension `dim` has fidelity in `[lo, hi)`.
pub fn haar_bin_probability(lo: f64, hi: f64, dim: usize) -> f64 {
    let e = (dim - 1) as i32;
    (1.0 - lo).powi(e) - (1.0 - hi).powi(e)
}

/// KL divergence of the fidelity histogram from the Haar distribution.
pub fn expressibility_from_fidelities(
    fidelities: &[f64],
    n_bins: usize,
    dim: usize,
) -> Result<ExpressibilityResult, MetricsError> {
    if n_bins == 0 {
        return Err(MetricsError::NoBins);
    }
    if fidelities.is_empty() {
        return Err(MetricsError::TooFewSamples { need: 1, got: 0 });
    }
    let mut counts = vec![0usize; n_bins];
    for &f in fidelities {
        let b = ((f.clamp(0.0, 1.0) * n_bins as f64) as usize).min(n_bins - 1);
        counts[b] += 1;
    }
    let histogram: Vec<f64> = counts
        .iter()
        .map(|&c| c as f64 / fidelities.len() as f64)
        .collect();
    let haar: Vec<f64> = (0..n_bins)
        .map(|b| haar_bin_probability(b as f64 / n_bins as f64, (b + 1) as f64 / n_bins as f64, dim))
        .collect();
    let smooth = |v: &[f64]| -> Vec<f64> {
        let total: f64 = v.iter().map(|p| p + HISTOGRAM_SMOOTHING).sum();
        v.iter().map(|p| (p + HISTOGRAM_SMOOTHING) / total).collect()
    };
    let (p, q) = (smooth(&histogram), smooth(&haar));
    let dkl = p.iter().zip(&q).map(|(a, b)| a * (a / b).ln()).sum::<f64>().max(0.0);
    Ok(ExpressibilityResult { histogram, haar, dkl })
}

/// Expressibility from a pair sampler; `sample(i)` returns the i-th state pair.
pub fn expressibility_with<F>(
    n_pairs: usize,
    n_bins: usize,
    dim: usize,
    sample: F,
) -> Result<ExpressibilityResult, MetricsError>
where
    F: Fn(usize) -> Result<(StateVector, StateVector), MetricsError> + Sync,
{
    let fidelities = (0..n_pairs)
        .into_par_iter()
        .map(|i| {
            let (a, b) = sample(i)?;
            Ok(fidelity(&a, &b)?)
        })
        .collect::<Result<Vec<f64>, MetricsError>>()?;
    expressibility_from_fidelities(&fidelities, n_bins, dim)
}

/// Haar-random pure state from normalised complex Gaussian amplitudes.
pub fn haar_state<R: Rng + ?Sized>(rng: &mut R, n_qubits: usize) -> StateVector {
    let amps = (0..1usize << n_qubits)
        .map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect();
    StateVector::from_amplitudes(amps)
        .expect("power-of-two length")
        .normalised()
}

/// Expressibility of the pulse-realised ansatz at x = 0 over `cfg.n_samples` pairs.
pub fn expressibility(
    ansatz: &Ansatz,
    cfg: &SamplingConfig,
    n_bins: usize,
) -> Result<ExpressibilityResult, MetricsError> {
    if cfg.n_samples < 100 {
        return Err(MetricsError::TooFewSamples {
            need: 100,
            got: cfg.n_samples,
        });
    }
    let template = QfmModel::new(ansatz, cfg.n_blocks, Mode::Pulse)?;
    let dim = 1 << ansatz.n_qubits();
    expressibility_with(cfg.n_samples, n_bins, dim, |i| {
        let label = format!("expressibility/{}/pair{i}", ansatz.name());
        let a = distorted_sample(&template, cfg.master_seed, &format!("{label}/a"), cfg.sigma2)?;
        let b = distorted_sample(&template, cfg.master_seed, &format!("{label}/b"), cfg.sigma2)?;
        Ok((a.state(0.0), b.state(0.0)))
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FidelityRow {
    pub sigma2: f64,
    pub fidelity_mean: f64,
    pub fidelity_std: f64,
    pub trace_mean: f64,
    pub trace_std: f64,
    pub n_samples: usize,
}

/// Mean fidelity and trace distance between gate-mode and distorted
/// pulse-mode final states over random `(θ, x)`, for each sigma2.
pub fn fidelity_distortion_sweep(
    ansatz: &Ansatz,
    sigma2_grid: &[f64],
    cfg: &SamplingConfig,
) -> Result<Vec<FidelityRow>, MetricsError> {
    if let Some(&bad) = sigma2_grid.iter().find(|&&s| s < 0.0) {
        return Err(MetricsError::NegativeVariance(bad));
    }
    let gate = QfmModel::new(ansatz, cfg.n_blocks, Mode::Gate)?;
    sigma2_grid
        .iter()
        .map(|&sigma2| {
            let pairs = (0..cfg.n_samples)
                .into_par_iter()
                .map(|i| {
                    let label = format!("fidelity/{}/sample{i}", ansatz.name());
                    let mut g = gate.clone();
                    let mut rng = stream(cfg.master_seed, &format!("{label}/theta"));
                    g.randomize_theta(&mut rng);
                    let x = rng.random::<f64>() * TAU;
                    let mut p = g.with_mode(Mode::Pulse);
                    let lambda = sample_lambda_distortion(
                        &mut stream(cfg.master_seed, &format!("{label}/lambda")),
                        sigma2,
                        p.lambda().len(),
                    )?;
                    p.set_lambda(&lambda)?;
                    let (a, b) = (g.state(x), p.state(x));
                    Ok((fidelity(&a, &b)?, trace_distance(&a, &b)?))
                })
                .collect::<Result<Vec<(f64, f64)>, MetricsError>>()?;
            let (f, t): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
            let (fm, fs) = mean_std(&f);
            let (tm, ts) = mean_std(&t);
            Ok(FidelityRow {
                sigma2,
                fidelity_mean: fm,
                fidelity_std: fs,
                trace_mean: tm,
                trace_std: ts,
                n_samples: cfg.n_samples,
            })
        })
        .collect()
}

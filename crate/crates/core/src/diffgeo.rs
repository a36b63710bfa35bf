//! Jacobians of the coefficient map and the local rank diagnostics built on them.

use thiserror::Error;

use crate::gates::{DecompositionRule, GateKind, SubAngle, SubGate};
use crate::linalg::{real_rank, LinalgError, RealMatrix, DEFAULT_RANK_TOL};
use crate::model::{Ansatz, Encoding, GatePlacement, Layer, ModelError, Mode, QfmModel};
use crate::spectral::{extract_coefficients, model_frequencies, nyquist_grid, CoefficientVector, SpectralError};

/// Gradient norm below which a gate-mode point counts as converged.
pub const CONVERGED_GRAD_NORM: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DiffgeoError {
    #[error("gate optimisation did not converge: |grad_theta| = {grad_norm:e}")]
    NotConverged { grad_norm: f64 },
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Wrt {
    Theta,
    /// θ followed by the mode's extension parameters (λ or decomposition scales).
    All,
}

/// Real Jacobian of `(Re c_ω…, Im c_ω…)` with respect to the model's parameters.
pub fn coefficient_jacobian(model: &QfmModel, wrt: Wrt) -> Result<RealMatrix, DiffgeoError> {
    let grid = nyquist_grid(&model.spectrum())?;
    let freqs = model_frequencies(model)?;
    let grads = model.parameter_gradients(&grid);
    let n_cols = match wrt {
        Wrt::Theta => model.theta().len(),
        Wrt::All => model.n_trainable(),
    };
    let rows = 2 * freqs.len();
    let mut j = RealMatrix::zeros(rows, n_cols);
    for (c, g) in grads.iter().take(n_cols).enumerate() {
        let col = CoefficientVector::from_samples(freqs.clone(), g).to_real();
        for (r, v) in col.into_iter().enumerate() {
            j[(r, c)] = v;
        }
    }
    Ok(j)
}

#[derive(Debug, Clone, PartialEq)]
pub struct JacobianReport {
    pub j_theta: RealMatrix,
    pub j_ext: RealMatrix,
    pub rank_theta: usize,
    pub rank_ext: usize,
    pub rank_gain: usize,
    pub n_extension: usize,
    pub n_frequencies: usize,
}

impl JacobianReport {
    /// The upper bound `min(q, 2|Ω| − rank_θ)` on the rank gain.
    pub fn gain_bound(&self) -> usize {
        self.n_extension.min(2 * self.n_frequencies - self.rank_theta)
    }
}

/// Ranks of the θ and extended Jacobians at the model's current point. A
/// gate-mode model is extended with pulse scalings at λ = 1.
pub fn rank_report(model: &QfmModel) -> Result<JacobianReport, DiffgeoError> {
    rank_report_with_tol(model, DEFAULT_RANK_TOL)
}

pub fn rank_report_with_tol(model: &QfmModel, tol: f64) -> Result<JacobianReport, DiffgeoError> {
    let ext_model = match model.mode() {
        Mode::Gate => model.with_mode(Mode::Pulse),
        _ => model.clone(),
    };
    let j_ext = coefficient_jacobian(&ext_model, Wrt::All)?;
    let n_theta = ext_model.theta().len();
    let j_theta = j_ext.columns(0, n_theta).into_owned();
    let rank_theta = real_rank(&j_theta, tol)?;
    let rank_ext = real_rank(&j_ext, tol)?;
    Ok(JacobianReport {
        n_extension: j_ext.ncols() - n_theta,
        n_frequencies: j_ext.nrows() / 2,
        rank_gain: rank_ext.saturating_sub(rank_theta),
        j_theta,
        j_ext,
        rank_theta,
        rank_ext,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EscapeReport {
    pub grad_theta_norm: f64,
    pub grad_lambda_norm: f64,
    pub residual_norm: f64,
}

/// Gradient `2 Jᵀ r` of `L = Σ_ω |c_ω − c*_ω|²`, split into the θ part and the rest.
pub fn loss_gradient(model: &QfmModel, target: &CoefficientVector) -> Result<(Vec<f64>, Vec<f64>, f64), DiffgeoError> {
    let r = extract_coefficients(model)?.sub(target)?;
    let rv = r.to_real();
    let j = coefficient_jacobian(model, Wrt::All)?;
    let g: Vec<f64> = (0..j.ncols())
        .map(|c| 2.0 * j.column(c).iter().zip(&rv).map(|(a, b)| a * b).sum::<f64>())
        .collect();
    let (th, ext) = g.split_at(model.theta().len());
    Ok((th.to_vec(), ext.to_vec(), r.norm_sqr().sqrt()))
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Evaluates the loss gradient along θ and along the pulse scalings (at the
/// model's λ, normally 1) at a gate-mode optimum. Fails if `‖∇_θ L‖` is not
/// below [`CONVERGED_GRAD_NORM`].
pub fn escape_direction_test(
    model: &QfmModel,
    target: &CoefficientVector,
) -> Result<EscapeReport, DiffgeoError> {
    let pulse = match model.mode() {
        Mode::Pulse => model.clone(),
        _ => model.with_mode(Mode::Pulse),
    };
    let (gt, gl, residual_norm) = loss_gradient(&pulse, target)?;
    let report = EscapeReport {
        grad_theta_norm: norm(&gt),
        grad_lambda_norm: norm(&gl),
        residual_norm,
    };
    if !(report.grad_theta_norm < CONVERGED_GRAD_NORM) {
        return Err(DiffgeoError::NotConverged {
            grad_norm: report.grad_theta_norm,
        });
    }
    Ok(report)
}

/// Single-qubit model `RX(aθ)·RY(bθ)·RX(x)|0⟩` measured in Z, in the given mode.
pub fn example2_model(a: f64, b: f64, mode: Mode) -> QfmModel {
    let rule = DecompositionRule::custom(
        "rx_ry",
        1,
        1,
        vec![
            SubGate::rot(GateKind::Ry, SubAngle::Linear { param: 0, coeff: b }, 0),
            SubGate::rot(GateKind::Rx, SubAngle::Linear { param: 0, coeff: a }, 0),
        ],
    )
    .expect("valid rule");
    let ansatz = Ansatz::new("rx_ry", 1, vec![GatePlacement::custom(rule, &[0])]).expect("valid ansatz");
    QfmModel::from_layers(
        1,
        vec![Layer::Encoding, Layer::Trainable(ansatz)],
        Encoding::ternary(1),
        mode,
        0,
    )
    .expect("valid layout")
}

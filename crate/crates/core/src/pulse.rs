//! Effective pulse-area model for fixed-axis rotations.
//!
//! Under the rotating-wave approximation a resonant single-axis drive with
//! envelope `E(t)` implements `exp(−iθ λ H̃)` where `λ = ∫₀^δt E(t) dt` is the
//! pulse area and `H̃ = P/2`. Areas are reported relative to a nominal pulse so
//! that `λ = 1` reproduces the logical gate.

use std::f64::consts::{PI, SQRT_2};

use rand::Rng;
use rand_distr::{Distribution, Normal};
use libm::erf;
use thiserror::Error;

use crate::gates::{decompose, gate_unitary, GateError, GateKind};
use crate::linalg::UnitaryMatrix;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PulseError {
    #[error("invalid pulse parameters: {0}")]
    InvalidParams(String),
    #[error("{0} is not a single-axis rotation")]
    NotARotation(GateKind),
    #[error("expected {expected} pulse scalings, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("time-sliced propagation needs at least one step")]
    ZeroSteps,
    #[error("distortion variance must be non-negative, got {0}")]
    NegativeVariance(f64),
    #[error(transparent)]
    Gate(#[from] GateError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Envelope {
    Gaussian,
    Rectangular,
}

/// Envelope parameters of one drive pulse. Times share one arbitrary unit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseParams {
    amplitude: f64,
    width: f64,
    center: f64,
    window: f64,
    envelope: Envelope,
}

impl PulseParams {
    pub fn new(
        envelope: Envelope,
        amplitude: f64,
        width: f64,
        center: f64,
        window: f64,
    ) -> Result<Self, PulseError> {
        let bad = |m: &str| Err(PulseError::InvalidParams(m.to_string()));
        if !(amplitude > 0.0 && amplitude.is_finite()) {
            return bad("amplitude must be positive and finite");
        }
        if !(width > 0.0 && width.is_finite()) {
            return bad("width must be positive and finite");
        }
        if !(window > 0.0 && window.is_finite()) {
            return bad("window must be positive and finite");
        }
        if !(0.0..=window).contains(&center) {
            return bad("center must lie inside the window");
        }
        Ok(Self {
            amplitude,
            width,
            center,
            window,
            envelope,
        })
    }

    pub fn gaussian(amplitude: f64, width: f64, center: f64, window: f64) -> Result<Self, PulseError> {
        Self::new(Envelope::Gaussian, amplitude, width, center, window)
    }

    /// Constant drive of height `amplitude` over `[0, window]`.
    pub fn rectangular(amplitude: f64, window: f64) -> Result<Self, PulseError> {
        Self::new(Envelope::Rectangular, amplitude, window, window / 2.0, window)
    }

    /// Centered Gaussian with window `8σ`, contained well enough that the area
    /// is `Aσ√(2π)` to better than 1e-4 relative.
    pub fn canonical(amplitude: f64, width: f64) -> Result<Self, PulseError> {
        Self::gaussian(amplitude, width, 4.0 * width, 8.0 * width)
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn center(&self) -> f64 {
        self.center
    }

    pub fn window(&self) -> f64 {
        self.window
    }

    pub fn envelope(&self) -> Envelope {
        self.envelope
    }

    /// Envelope value `E(t)`; zero outside the window.
    pub fn envelope_at(&self, t: f64) -> f64 {
        if !(0.0..=self.window).contains(&t) {
            return 0.0;
        }
        match self.envelope {
            Envelope::Rectangular => self.amplitude,
            Envelope::Gaussian => {
                let z = (t - self.center) / self.width;
                self.amplitude * (-0.5 * z * z).exp()
            }
        }
    }
}

/// `∫₀^δt E(t) dt` in raw units.
pub fn pulse_area(p: &PulseParams) -> f64 {
    match p.envelope {
        Envelope::Rectangular => p.amplitude * p.window,
        Envelope::Gaussian => {
            let s = SQRT_2 * p.width;
            p.amplitude
                * p.width
                * (PI / 2.0).sqrt()
                * (erf((p.window - p.center) / s) + erf(p.center / s))
        }
    }
}

/// Maps raw pulse areas to dimensionless scalings with `λ = 1` at the nominal pulse.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Calibration {
    nominal_area: f64,
}

impl Calibration {
    pub fn from_nominal(nominal: &PulseParams) -> Self {
        Self {
            nominal_area: pulse_area(nominal),
        }
    }

    pub fn nominal_area(&self) -> f64 {
        self.nominal_area
    }

    pub fn lambda(&self, p: &PulseParams) -> EffectiveScaling {
        EffectiveScaling(pulse_area(p) / self.nominal_area)
    }
}

impl Default for Calibration {
    /// Provider-default pulse: canonical Gaussian with unit amplitude and width.
    fn default() -> Self {
        Self::from_nominal(&PulseParams::canonical(1.0, 1.0).expect("valid nominal pulse"))
    }
}

/// Dimensionless pulse-area factor λ.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct EffectiveScaling(pub f64);

impl EffectiveScaling {
    pub const NOMINAL: EffectiveScaling = EffectiveScaling(1.0);

    pub fn value(self) -> f64 {
        self.0
    }
}

/// `exp(−iθλ P/2)` for a basis rotation.
pub fn scaled_gate_unitary(kind: GateKind, theta: f64, lambda: f64) -> Result<UnitaryMatrix, PulseError> {
    if !kind.is_rotation() {
        return Err(PulseError::NotARotation(kind));
    }
    Ok(gate_unitary(kind, &[theta * lambda])?)
}

/// Basis rotation driven by pulse `p`: depends on `(A, σ, t_c, δt)` only through λ.
pub fn pulse_driven_rotation(
    kind: GateKind,
    theta: f64,
    p: &PulseParams,
    calibration: &Calibration,
) -> Result<UnitaryMatrix, PulseError> {
    scaled_gate_unitary(kind, theta, calibration.lambda(p).value())
}

/// Composite gate with one scaling per sub-gate: each rotation angle `g_m(θ)`
/// becomes `g_m(θ)·λ_m`. Slots of entangling or parameterless sub-gates accept
/// a value but it has no effect.
pub fn pulse_realised_composite(
    kind: GateKind,
    theta: &[f64],
    lambdas: &[f64],
) -> Result<UnitaryMatrix, PulseError> {
    let rule = decompose(kind);
    if lambdas.len() != rule.sub_gates().len() {
        return Err(PulseError::LengthMismatch {
            expected: rule.sub_gates().len(),
            got: lambdas.len(),
        });
    }
    let angles: Vec<Option<f64>> = rule
        .sub_angles(theta)?
        .into_iter()
        .zip(lambdas)
        .map(|(g, l)| g.map(|g| g * l))
        .collect();
    Ok(rule.realise(&angles))
}

/// Time-ordered propagator of `H(t) = θ·E(t)/A₀·P/2` over the pulse window,
/// using `steps` midpoint slices. `A₀` is the calibration's nominal area, so the
/// result converges to `scaled_gate_unitary(axis, θ, λ)`.
pub fn time_sliced_propagator(
    p: &PulseParams,
    calibration: &Calibration,
    theta: f64,
    axis: GateKind,
    steps: usize,
) -> Result<UnitaryMatrix, PulseError> {
    if !axis.is_rotation() {
        return Err(PulseError::NotARotation(axis));
    }
    if steps == 0 {
        return Err(PulseError::ZeroSteps);
    }
    let dt = p.window / steps as f64;
    let mut u = UnitaryMatrix::identity(2);
    for i in 0..steps {
        let t = (i as f64 + 0.5) * dt;
        let angle = theta * p.envelope_at(t) * dt / calibration.nominal_area;
        // later slices act after earlier ones
        u = gate_unitary(axis, &[angle])?.mul(&u);
    }
    Ok(u)
}

/// `count` draws from `Normal(1, sigma2)`. With `sigma2 = 0` every draw is exactly 1.
///
/// The number of generator words consumed does not depend on `sigma2`, so two
/// calls on identically seeded generators see the same underlying normals.
pub fn sample_lambda_distortion<R: Rng + ?Sized>(
    rng: &mut R,
    sigma2: f64,
    count: usize,
) -> Result<Vec<f64>, PulseError> {
    if !(sigma2 >= 0.0) || !sigma2.is_finite() {
        return Err(PulseError::NegativeVariance(sigma2));
    }
    let normal = Normal::new(1.0, sigma2.sqrt()).map_err(|e| PulseError::InvalidParams(e.to_string()))?;
    Ok((0..count).map(|_| normal.sample(rng)).collect())
}

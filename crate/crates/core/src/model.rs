//! Quantum Fourier model assembly and evaluation.
//!
//! A model is a sequence of trainable blocks and encoding layers acting on
//! |0…0⟩, measured with Z on one qubit. The default layout alternates
//! `W(θ₁) S(x) W(θ₂) … S(x) W(θ_L+1)` (matrix order reversed).
//!
//! Every trainable gate is described by a [`DecompositionRule`]. Its rotation
//! sub-gates carry effective angles `φ_m = g_m(θ)·s_m`, where the scale `s_m` is
//! 1 in gate mode, a trainable decomposition scale in decomposed mode (composite
//! gates only), and the pulse-area factor λ in pulse mode. Derivatives are taken
//! with respect to these effective angles by the parameter-shift rule and then
//! chained to the trainable parameters.

use std::f64::consts::{FRAC_PI_2, TAU};
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::gates::{decompose, gate_unitary, DecompositionRule, GateError, GateKind, SubAngle};
use crate::linalg::{LinalgError, StateVector, UnitaryMatrix, MAX_QUBITS};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("invalid ansatz `{name}`: {reason}")]
    InvalidAnsatz { name: String, reason: String },
    #[error("unknown ansatz `{0}`")]
    UnknownAnsatz(String),
    #[error("unknown mode `{0}` (expected gate, decomposed or pulse)")]
    UnknownMode(String),
    #[error("{what} has length {got}, expected {expected}")]
    ParamLength {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("invalid model layout: {0}")]
    Layout(String),
    #[error(transparent)]
    Gate(#[from] GateError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// One logical gate placed on register wires.
#[derive(Debug, Clone, PartialEq)]
pub struct GatePlacement {
    rule: DecompositionRule,
    wires: Vec<usize>,
}

impl GatePlacement {
    pub fn new(kind: GateKind, wires: &[usize]) -> Self {
        Self {
            rule: decompose(kind).clone(),
            wires: wires.to_vec(),
        }
    }

    pub fn custom(rule: DecompositionRule, wires: &[usize]) -> Self {
        Self {
            rule,
            wires: wires.to_vec(),
        }
    }

    pub fn rule(&self) -> &DecompositionRule {
        &self.rule
    }

    pub fn wires(&self) -> &[usize] {
        &self.wires
    }

    fn gets_decomposition_scales(&self) -> bool {
        !self.rule.is_basis()
    }
}

/// Template for one trainable block.
#[derive(Debug, Clone, PartialEq)]
pub struct Ansatz {
    name: String,
    n_qubits: usize,
    layer: Vec<GatePlacement>,
}

impl Ansatz {
    pub fn new(name: &str, n_qubits: usize, layer: Vec<GatePlacement>) -> Result<Self, ModelError> {
        let invalid = |reason: String| ModelError::InvalidAnsatz {
            name: name.to_string(),
            reason,
        };
        if n_qubits == 0 || n_qubits > MAX_QUBITS {
            return Err(invalid(format!("{n_qubits} qubits not supported")));
        }
        for g in &layer {
            if g.wires.len() != g.rule.arity() {
                return Err(invalid(format!("{} needs {} wires", g.rule.name(), g.rule.arity())));
            }
            for (i, &w) in g.wires.iter().enumerate() {
                if w >= n_qubits {
                    return Err(invalid(format!("wire {w} out of range")));
                }
                if g.wires[..i].contains(&w) {
                    return Err(invalid(format!("wire {w} repeated in {}", g.rule.name())));
                }
            }
        }
        Ok(Self {
            name: name.to_string(),
            n_qubits,
            layer,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn gates(&self) -> &[GatePlacement] {
        &self.layer
    }

    /// Logical angles per block (Rot counts 3).
    pub fn params_per_block(&self) -> usize {
        self.layer.iter().map(|g| g.rule.n_params()).sum()
    }

    pub fn pulse_params_per_block(&self) -> usize {
        self.layer.iter().map(|g| g.rule.pulse_param_count()).sum()
    }

    /// Rotation sub-gates per block, i.e. λ slots in pulse mode.
    pub fn lambdas_per_block(&self) -> usize {
        self.layer.iter().map(|g| g.rule.rotation_slots().len()).sum()
    }

    /// Rotation sub-gates of composite gates, i.e. scales in decomposed mode.
    pub fn scales_per_block(&self) -> usize {
        self.layer
            .iter()
            .filter(|g| g.gets_decomposition_scales())
            .map(|g| g.rule.rotation_slots().len())
            .sum()
    }

    /// Whether some gate drives several sub-rotations from one logical angle.
    pub fn has_composite_gates(&self) -> bool {
        self.layer.iter().any(|g| g.rule.shares_angle())
    }
}

fn ring(kind: GateKind, n: usize) -> Vec<GatePlacement> {
    match n {
        1 => Vec::new(),
        2 => vec![GatePlacement::new(kind, &[0, 1])],
        _ => (0..n).map(|i| GatePlacement::new(kind, &[i, (i + 1) % n])).collect(),
    }
}

fn single(kind: GateKind, n: usize) -> Vec<GatePlacement> {
    (0..n).map(|q| GatePlacement::new(kind, &[q])).collect()
}

/// Names of the library ansätze, ordered by pulse-parameter count.
pub const ANSATZ_NAMES: [&str; 6] = ["basis_rx", "rot_cz", "ry_cx", "ry_crz", "rot_cry", "rot_crx"];

/// Builds a library ansatz on `n_qubits` wires: an entangling ring where qubit
/// `i` controls `i+1 mod n`, followed by one rotation per qubit.
pub fn ansatz_by_name(name: &str, n_qubits: usize) -> Result<Ansatz, ModelError> {
    use GateKind::*;
    let (rot, ent) = match name {
        "basis_rx" => (Rx, Cz),
        "rot_cz" => (Rot, Cz),
        "ry_cx" => (Ry, Cx),
        "ry_crz" => (Ry, Crz),
        "rot_cry" => (Rot, Cry),
        "rot_crx" => (Rot, Crx),
        _ => return Err(ModelError::UnknownAnsatz(name.to_string())),
    };
    let mut layer = ring(ent, n_qubits);
    layer.extend(single(rot, n_qubits));
    Ansatz::new(name, n_qubits, layer)
}

pub fn ansatz_library_for(n_qubits: usize) -> Result<Vec<Ansatz>, ModelError> {
    let mut lib: Vec<Ansatz> = ANSATZ_NAMES
        .iter()
        .map(|n| ansatz_by_name(n, n_qubits))
        .collect::<Result<_, _>>()?;
    lib.sort_by_key(|a| a.pulse_params_per_block());
    Ok(lib)
}

/// The six 3-qubit library ansätze.
pub fn ansatz_library() -> Vec<Ansatz> {
    ansatz_library_for(3).expect("library builds for 3 qubits")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Mode {
    Gate,
    Decomposed,
    Pulse,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::Gate, Mode::Decomposed, Mode::Pulse];

    pub fn name(self) -> &'static str {
        match self {
            Mode::Gate => "gate",
            Mode::Decomposed => "decomposed",
            Mode::Pulse => "pulse",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mode {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Mode::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| ModelError::UnknownMode(s.to_string()))
    }
}

/// Per-qubit RX encoding scalings.
#[derive(Debug, Clone, PartialEq)]
pub struct Encoding {
    scalings: Vec<f64>,
}

impl Encoding {
    pub fn new(scalings: Vec<f64>) -> Self {
        Self { scalings }
    }

    /// Scalings `3^{m}` for qubits `m = 0…n−1`, giving a gap-free integer spectrum.
    pub fn ternary(n_qubits: usize) -> Self {
        Self {
            scalings: (0..n_qubits).map(|m| 3f64.powi(m as i32)).collect(),
        }
    }

    pub fn scalings(&self) -> &[f64] {
        &self.scalings
    }

    fn apply(&self, state: &mut StateVector, x: f64) {
        for (q, s) in self.scalings.iter().enumerate() {
            let g = gate_unitary(GateKind::Rx, &[s * x]).expect("one angle");
            state.apply_gate_in_place(&g, &[q]).expect("encoding wire in range");
        }
    }
}

/// Full-register matrix of the ternary feature map `⊗_m RX(3^m x)`.
pub fn ternary_feature_map(x: f64, n_qubits: usize) -> UnitaryMatrix {
    let enc = Encoding::ternary(n_qubits);
    let mut u = UnitaryMatrix::identity(1 << n_qubits);
    for (q, s) in enc.scalings.iter().enumerate() {
        let g = gate_unitary(GateKind::Rx, &[s * x]).expect("one angle");
        u.left_apply(&g, &[q]).expect("wire in range");
    }
    u
}

/// Frequencies reachable by an encoding, with their multiplicities.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencySpectrum {
    frequencies: Vec<f64>,
    redundancy: Vec<usize>,
}

impl FrequencySpectrum {
    /// Enumerates all sums of per-qubit, per-layer eigenvalue gaps `{−s, 0, s}`
    /// of the RX encoding generators `s·X/2`.
    pub fn from_encoding(encoding: &Encoding, n_layers: usize) -> Self {
        let mut sums: Vec<f64> = vec![0.0];
        for _ in 0..n_layers {
            for &s in &encoding.scalings {
                sums = sums.iter().flat_map(|&w| [w - s, w, w + s]).collect();
            }
        }
        sums.sort_by(f64::total_cmp);
        let mut frequencies: Vec<f64> = Vec::new();
        let mut redundancy: Vec<usize> = Vec::new();
        for w in sums {
            match frequencies.last() {
                Some(&last) if (w - last).abs() <= 1e-9 * (1.0 + w.abs()) => {
                    *redundancy.last_mut().expect("paired") += 1
                }
                _ => {
                    frequencies.push(w);
                    redundancy.push(1);
                }
            }
        }
        Self {
            frequencies,
            redundancy,
        }
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    pub fn redundancies(&self) -> &[usize] {
        &self.redundancy
    }

    pub fn len(&self) -> usize {
        self.frequencies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frequencies.is_empty()
    }

    pub fn max_frequency(&self) -> f64 {
        self.frequencies.last().copied().unwrap_or(0.0)
    }

    pub fn redundancy(&self, omega: f64) -> Option<usize> {
        self.index_of(omega).map(|i| self.redundancy[i])
    }

    pub fn index_of(&self, omega: f64) -> Option<usize> {
        self.frequencies.iter().position(|&w| (w - omega).abs() < 1e-9)
    }

    /// Integer frequencies, if every frequency is integral.
    pub fn integer_frequencies(&self) -> Option<Vec<i64>> {
        self.frequencies
            .iter()
            .map(|&w| ((w - w.round()).abs() < 1e-9).then_some(w.round() as i64))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Layer {
    Trainable(Ansatz),
    Encoding,
}

/// Where a gate's parameters live inside the model's vectors.
#[derive(Debug, Clone, PartialEq)]
struct GateSlot {
    layer: usize,
    gate: usize,
    theta_offset: usize,
    /// Offset into λ (pulse) or decomposition scales; `None` when the gate has none.
    scale_offset: Option<usize>,
}

/// One rotation sub-gate angle and how it depends on the trainable parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveAngle {
    pub layer: usize,
    pub gate: usize,
    pub sub_gate: usize,
    pub value: f64,
    /// `(trainable index, ∂φ/∂p)` pairs with nonzero derivative.
    pub derivatives: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QfmModel {
    n_qubits: usize,
    layers: Vec<Layer>,
    encoding: Encoding,
    mode: Mode,
    observable_qubit: usize,
    theta: Vec<f64>,
    lambda: Vec<f64>,
    scales: Vec<f64>,
    slots: Vec<GateSlot>,
}

impl QfmModel {
    /// `n_blocks` trainable copies of `ansatz` with a ternary encoding layer
    /// between consecutive blocks. θ starts at 0 and scalings at 1.
    pub fn new(ansatz: &Ansatz, n_blocks: usize, mode: Mode) -> Result<Self, ModelError> {
        if n_blocks == 0 {
            return Err(ModelError::Layout("need at least one trainable block".into()));
        }
        let mut layers = Vec::with_capacity(2 * n_blocks - 1);
        for b in 0..n_blocks {
            if b > 0 {
                layers.push(Layer::Encoding);
            }
            layers.push(Layer::Trainable(ansatz.clone()));
        }
        Self::from_layers(
            ansatz.n_qubits(),
            layers,
            Encoding::ternary(ansatz.n_qubits()),
            mode,
            0,
        )
    }

    pub fn from_layers(
        n_qubits: usize,
        layers: Vec<Layer>,
        encoding: Encoding,
        mode: Mode,
        observable_qubit: usize,
    ) -> Result<Self, ModelError> {
        if n_qubits == 0 || n_qubits > MAX_QUBITS {
            return Err(ModelError::Layout(format!("{n_qubits} qubits not supported")));
        }
        if encoding.scalings.len() != n_qubits {
            return Err(ModelError::Layout("one encoding scaling per qubit required".into()));
        }
        if observable_qubit >= n_qubits {
            return Err(ModelError::Layout("observable qubit out of range".into()));
        }
        let mut slots = Vec::new();
        let (mut n_theta, mut n_lambda, mut n_scales) = (0, 0, 0);
        for (li, layer) in layers.iter().enumerate() {
            if let Layer::Trainable(a) = layer {
                if a.n_qubits() != n_qubits {
                    return Err(ModelError::Layout(format!(
                        "ansatz `{}` has {} qubits, model has {n_qubits}",
                        a.name(),
                        a.n_qubits()
                    )));
                }
                for (gi, g) in a.gates().iter().enumerate() {
                    let rot = g.rule.rotation_slots().len();
                    let scale_offset = match mode {
                        Mode::Pulse if rot > 0 => Some(n_lambda),
                        Mode::Decomposed if rot > 0 && g.gets_decomposition_scales() => Some(n_scales),
                        _ => None,
                    };
                    slots.push(GateSlot {
                        layer: li,
                        gate: gi,
                        theta_offset: n_theta,
                        scale_offset,
                    });
                    n_theta += g.rule.n_params();
                    n_lambda += rot;
                    if g.gets_decomposition_scales() {
                        n_scales += rot;
                    }
                }
            }
        }
        Ok(Self {
            n_qubits,
            layers,
            encoding,
            mode,
            observable_qubit,
            theta: vec![0.0; n_theta],
            lambda: if mode == Mode::Pulse { vec![1.0; n_lambda] } else { Vec::new() },
            scales: if mode == Mode::Decomposed { vec![1.0; n_scales] } else { Vec::new() },
            slots,
        })
    }

    /// Same circuit and θ in another mode, with extensions at their nominal values.
    pub fn with_mode(&self, mode: Mode) -> Self {
        let mut m = Self::from_layers(
            self.n_qubits,
            self.layers.clone(),
            self.encoding.clone(),
            mode,
            self.observable_qubit,
        )
        .expect("layout already validated");
        m.theta = self.theta.clone();
        m
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn observable_qubit(&self) -> usize {
        self.observable_qubit
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn encoding(&self) -> &Encoding {
        &self.encoding
    }

    pub fn n_encoding_layers(&self) -> usize {
        self.layers.iter().filter(|l| matches!(l, Layer::Encoding)).count()
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    pub fn decomposition_scales(&self) -> &[f64] {
        &self.scales
    }

    pub fn set_theta(&mut self, theta: &[f64]) -> Result<(), ModelError> {
        check_len("theta", self.theta.len(), theta.len())?;
        self.theta.copy_from_slice(theta);
        Ok(())
    }

    pub fn set_lambda(&mut self, lambda: &[f64]) -> Result<(), ModelError> {
        check_len("lambda", self.lambda.len(), lambda.len())?;
        self.lambda.copy_from_slice(lambda);
        Ok(())
    }

    pub fn set_decomposition_scales(&mut self, scales: &[f64]) -> Result<(), ModelError> {
        check_len("decomposition scales", self.scales.len(), scales.len())?;
        self.scales.copy_from_slice(scales);
        Ok(())
    }

    /// Draws every θ uniformly from `[0, 2π)`.
    pub fn randomize_theta<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        self.theta.iter_mut().for_each(|t| *t = rng.random::<f64>() * TAU);
    }

    /// The vector optimised in this mode: θ, followed by λ (pulse) or scales (decomposed).
    pub fn trainable(&self) -> Vec<f64> {
        let mut v = self.theta.clone();
        v.extend_from_slice(self.extension());
        v
    }

    pub fn n_trainable(&self) -> usize {
        self.theta.len() + self.extension().len()
    }

    fn extension(&self) -> &[f64] {
        match self.mode {
            Mode::Gate => &[],
            Mode::Decomposed => &self.scales,
            Mode::Pulse => &self.lambda,
        }
    }

    pub fn set_trainable(&mut self, params: &[f64]) -> Result<(), ModelError> {
        check_len("trainable parameters", self.n_trainable(), params.len())?;
        let (th, ext) = params.split_at(self.theta.len());
        self.theta.copy_from_slice(th);
        match self.mode {
            Mode::Gate => {}
            Mode::Decomposed => self.scales.copy_from_slice(ext),
            Mode::Pulse => self.lambda.copy_from_slice(ext),
        }
        Ok(())
    }

    pub fn spectrum(&self) -> FrequencySpectrum {
        FrequencySpectrum::from_encoding(&self.encoding, self.n_encoding_layers())
    }

    fn placement(&self, slot: &GateSlot) -> &GatePlacement {
        match &self.layers[slot.layer] {
            Layer::Trainable(a) => &a.gates()[slot.gate],
            Layer::Encoding => unreachable!("slots only reference trainable layers"),
        }
    }

    fn scale_vector(&self) -> &[f64] {
        match self.mode {
            Mode::Pulse => &self.lambda,
            Mode::Decomposed => &self.scales,
            Mode::Gate => &[],
        }
    }

    /// Effective sub-gate angles of one gate, in rule order.
    fn sub_angles(&self, slot: &GateSlot) -> Vec<Option<f64>> {
        let rule = self.placement(slot).rule();
        let theta = &self.theta[slot.theta_offset..slot.theta_offset + rule.n_params()];
        let mut angles = rule.sub_angles(theta).expect("theta slice sized by rule");
        if let Some(off) = slot.scale_offset {
            let scales = self.scale_vector();
            for (k, m) in rule.rotation_slots().into_iter().enumerate() {
                angles[m] = angles[m].map(|a| a * scales[off + k]);
            }
        }
        angles
    }

    /// Unitary of one placed gate; `shift` adds `delta` to sub-gate `m`'s angle.
    fn gate_matrix(&self, slot: &GateSlot, shift: Option<(usize, f64)>) -> UnitaryMatrix {
        let rule = self.placement(slot).rule();
        if shift.is_none() && slot.scale_offset.is_none() {
            let theta = &self.theta[slot.theta_offset..slot.theta_offset + rule.n_params()];
            return rule.unitary(theta).expect("theta slice sized by rule");
        }
        let mut angles = self.sub_angles(slot);
        if let Some((m, delta)) = shift {
            angles[m] = angles[m].map(|a| a + delta);
        }
        rule.realise(&angles)
    }

    fn block_matrix(&self, layer: usize, shift: Option<(usize, usize, f64)>) -> UnitaryMatrix {
        let mut u = UnitaryMatrix::identity(1 << self.n_qubits);
        for slot in self.slots.iter().filter(|s| s.layer == layer) {
            let sh = shift.and_then(|(g, m, d)| (g == slot.gate).then_some((m, d)));
            let g = self.gate_matrix(slot, sh);
            u.left_apply(&g, self.placement(slot).wires())
                .expect("wires validated by ansatz");
        }
        u
    }

    /// Precomputes every trainable block unitary.
    pub fn prepare(&self) -> PreparedModel<'_> {
        let blocks = self
            .layers
            .iter()
            .enumerate()
            .map(|(i, l)| match l {
                Layer::Trainable(_) => Some(self.block_matrix(i, None)),
                Layer::Encoding => None,
            })
            .collect();
        PreparedModel { model: self, blocks }
    }

    /// Final state `U(x)|0…0⟩`.
    pub fn state(&self, x: f64) -> StateVector {
        self.prepare().state(x)
    }

    /// `f(x) = ⟨ψ(x)|Z_q|ψ(x)⟩`.
    pub fn forward(&self, x: f64) -> f64 {
        self.prepare().forward(x)
    }

    pub fn evaluate(&self, xs: &[f64]) -> Vec<f64> {
        let p = self.prepare();
        xs.iter().map(|&x| p.forward(x)).collect()
    }

    /// All rotation sub-gate angles that depend on a trainable parameter.
    pub fn effective_angles(&self) -> Vec<EffectiveAngle> {
        let n_theta = self.theta.len();
        let mut out = Vec::new();
        for slot in &self.slots {
            let rule = self.placement(slot).rule();
            let theta = &self.theta[slot.theta_offset..slot.theta_offset + rule.n_params()];
            let base = rule.sub_angles(theta).expect("sized by rule");
            let angles = self.sub_angles(slot);
            for (k, m) in rule.rotation_slots().into_iter().enumerate() {
                let scale = slot.scale_offset.map(|off| (off + k, self.scale_vector()[off + k]));
                let mut derivatives = Vec::new();
                if let SubAngle::Linear { param, coeff } = rule.sub_gates()[m].angle {
                    let s = scale.map_or(1.0, |(_, s)| s);
                    derivatives.push((slot.theta_offset + param, coeff * s));
                }
                if let Some((idx, _)) = scale {
                    derivatives.push((n_theta + idx, base[m].expect("rotation slot")));
                }
                if derivatives.is_empty() {
                    continue;
                }
                out.push(EffectiveAngle {
                    layer: slot.layer,
                    gate: slot.gate,
                    sub_gate: m,
                    value: angles[m].expect("rotation slot"),
                    derivatives,
                });
            }
        }
        out
    }

    /// `∂f(x_k)/∂φ_j` for every effective angle `j` (outer index) and grid point
    /// `k`, by the two-term parameter-shift rule.
    pub fn angle_derivatives(&self, xs: &[f64]) -> (Vec<EffectiveAngle>, Vec<Vec<f64>>) {
        let angles = self.effective_angles();
        let prepared = self.prepare();
        let derivs = angles
            .par_iter()
            .map(|a| {
                let plus = self.block_matrix(a.layer, Some((a.gate, a.sub_gate, FRAC_PI_2)));
                let minus = self.block_matrix(a.layer, Some((a.gate, a.sub_gate, -FRAC_PI_2)));
                xs.iter()
                    .map(|&x| {
                        0.5 * (prepared.forward_with(x, a.layer, &plus)
                            - prepared.forward_with(x, a.layer, &minus))
                    })
                    .collect()
            })
            .collect();
        (angles, derivs)
    }

    /// `∂f(x_k)/∂p_i` for every trainable parameter `i` (outer index).
    pub fn parameter_gradients(&self, xs: &[f64]) -> Vec<Vec<f64>> {
        let (angles, derivs) = self.angle_derivatives(xs);
        let mut grads = vec![vec![0.0; xs.len()]; self.n_trainable()];
        for (a, d) in angles.iter().zip(&derivs) {
            for &(p, c) in &a.derivatives {
                for (g, v) in grads[p].iter_mut().zip(d) {
                    *g += c * v;
                }
            }
        }
        grads
    }
}

fn check_len(what: &'static str, expected: usize, got: usize) -> Result<(), ModelError> {
    if expected != got {
        return Err(ModelError::ParamLength { what, expected, got });
    }
    Ok(())
}

/// A model with its block unitaries cached.
pub struct PreparedModel<'a> {
    model: &'a QfmModel,
    blocks: Vec<Option<UnitaryMatrix>>,
}

impl PreparedModel<'_> {
    fn run(&self, x: f64, replace: Option<(usize, &UnitaryMatrix)>) -> StateVector {
        let n = self.model.n_qubits;
        let mut state = StateVector::zero(n).expect("validated size");
        let mut fresh = true;
        for (i, block) in self.blocks.iter().enumerate() {
            match block {
                Some(b) => {
                    let b = match replace {
                        Some((j, r)) if j == i => r,
                        _ => b,
                    };
                    state = if fresh { b.column(0) } else { b.apply(&state).expect("same dim") };
                }
                None => self.model.encoding.apply(&mut state, x),
            }
            fresh = false;
        }
        state
    }

    pub fn state(&self, x: f64) -> StateVector {
        self.run(x, None)
    }

    pub fn forward(&self, x: f64) -> f64 {
        self.state(x).expectation_z(self.model.observable_qubit)
    }

    fn forward_with(&self, x: f64, layer: usize, block: &UnitaryMatrix) -> f64 {
        self.run(x, Some((layer, block)))
            .expectation_z(self.model.observable_qubit)
    }

    pub fn block(&self, layer: usize) -> Option<&UnitaryMatrix> {
        self.blocks.get(layer).and_then(Option::as_ref)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracles::{brute_force_spectrum, central_differences, reference_forward};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_model(name: &str, mode: Mode, seed: u64) -> QfmModel {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut m = QfmModel::new(&ansatz_by_name(name, 3).unwrap(), 2, mode).unwrap();
        m.randomize_theta(&mut rng);
        let lam: Vec<f64> = (0..m.lambda().len()).map(|_| rng.random_range(0.7..1.3)).collect();
        m.set_lambda(&lam).unwrap();
        let sc: Vec<f64> = (0..m.decomposition_scales().len())
            .map(|_| rng.random_range(0.7..1.3))
            .collect();
        m.set_decomposition_scales(&sc).unwrap();
        m
    }

    #[test]
    fn library_counts() {
        let lib = ansatz_library();
        let names: Vec<&str> = lib.iter().map(|a| a.name()).collect();
        assert_eq!(names, ANSATZ_NAMES);
        let get = |n: &str| lib.iter().find(|a| a.name() == n).unwrap();
        assert_eq!(get("basis_rx").pulse_params_per_block(), 12);
        assert_eq!(get("rot_crx").pulse_params_per_block(), 93);
        assert_eq!(get("basis_rx").params_per_block(), 3);
        assert_eq!(get("rot_cz").params_per_block(), 9);
        assert_eq!(get("ry_crz").params_per_block(), 6);
        let composite: Vec<&str> = lib
            .iter()
            .filter(|a| a.has_composite_gates())
            .map(|a| a.name())
            .collect();
        assert_eq!(composite, ["ry_crz", "rot_cry", "rot_crx"]);
    }

    #[test]
    fn ansatz_validation() {
        let bad = Ansatz::new("x", 2, vec![GatePlacement::new(GateKind::Cz, &[0, 2])]);
        assert!(matches!(bad, Err(ModelError::InvalidAnsatz { .. })));
        let rep = Ansatz::new("x", 2, vec![GatePlacement::new(GateKind::Cz, &[1, 1])]);
        assert!(rep.is_err());
        assert!(matches!(ansatz_by_name("nope", 3), Err(ModelError::UnknownAnsatz(_))));
        assert_eq!("Pulse".parse::<Mode>().unwrap(), Mode::Pulse);
        assert!("x".parse::<Mode>().is_err());
    }

    #[test]
    fn parameter_vector_sizes() {
        let a = ansatz_by_name("rot_crx", 3).unwrap();
        let g = QfmModel::new(&a, 2, Mode::Gate).unwrap();
        let p = g.with_mode(Mode::Pulse);
        let d = g.with_mode(Mode::Decomposed);
        assert_eq!(g.theta().len(), 24);
        assert_eq!(g.n_trainable(), 24);
        // Rot 3 rotations, CRX 4
        assert_eq!(p.lambda().len(), 2 * (3 * 3 + 3 * 4));
        assert_eq!(d.decomposition_scales().len(), p.lambda().len());
        let b = QfmModel::new(&ansatz_by_name("ry_crz", 3).unwrap(), 2, Mode::Decomposed).unwrap();
        assert_eq!(b.decomposition_scales().len(), 2 * 3 * 2);
        assert_eq!(b.with_mode(Mode::Pulse).lambda().len(), 2 * (3 + 3 * 2));
        let mut g2 = g.clone();
        assert!(matches!(g2.set_theta(&[0.0; 3]), Err(ModelError::ParamLength { .. })));
    }

    #[test]
    fn ternary_encoding() {
        let u = ternary_feature_map(0.0, 3);
        assert!(u.max_abs_diff(&UnitaryMatrix::identity(8)) < 1e-15);
        assert_eq!(Encoding::ternary(3).scalings(), &[1.0, 3.0, 9.0]);
        let x = 0.83;
        let psi = ternary_feature_map(x, 1).column(0);
        assert!((psi.expectation_z(0) - x.cos()).abs() < 1e-14);
    }

    #[test]
    fn spectrum_examples() {
        let s = FrequencySpectrum::from_encoding(&Encoding::ternary(3), 1);
        assert_eq!(s.integer_frequencies().unwrap(), (-13..=13).collect::<Vec<i64>>());
        assert!(s.redundancies().iter().all(|&r| r == 1));
        let s1 = FrequencySpectrum::from_encoding(&Encoding::ternary(1), 1);
        assert_eq!(s1.integer_frequencies().unwrap(), vec![-1, 0, 1]);
        let s2 = FrequencySpectrum::from_encoding(&Encoding::ternary(1), 2);
        assert_eq!(s2.integer_frequencies().unwrap(), vec![-2, -1, 0, 1, 2]);
        assert_eq!(s2.redundancy(0.0), Some(3));
        assert_eq!(s2.redundancy(2.0), Some(1));
        for (scal, layers) in [(vec![1.0, 3.0, 9.0], 1), (vec![1.0, 2.0], 2), (vec![1.0, 1.0, 1.0], 1)] {
            let s = FrequencySpectrum::from_encoding(&Encoding::new(scal.clone()), layers);
            let bf = brute_force_spectrum(&scal, layers, 1.0);
            let ours: Vec<(i64, usize)> = s
                .integer_frequencies()
                .unwrap()
                .into_iter()
                .zip(s.redundancies().iter().copied())
                .collect();
            assert_eq!(ours, bf.into_iter().collect::<Vec<_>>());
        }
    }

    #[test]
    fn zero_theta_gives_cosine() {
        let a = ansatz_by_name("basis_rx", 3).unwrap();
        let m = QfmModel::new(&a, 2, Mode::Gate).unwrap();
        for x in [0.0, 0.4, 2.2, -1.7] {
            assert!((m.forward(x) - x.cos()).abs() < 1e-12);
        }
    }

    #[test]
    fn forward_matches_dense_reference() {
        for (i, name) in ANSATZ_NAMES.iter().enumerate() {
            for mode in Mode::ALL {
                let m = random_model(name, mode, 10 * i as u64 + mode as u64);
                for x in [0.0, 0.7, 2.9, 5.1] {
                    let r = reference_forward(&m, x, 0);
                    assert!((m.forward(x) - r).abs() < 1e-12, "{name} {mode} x={x}");
                }
            }
        }
    }

    #[test]
    fn nominal_modes_agree_with_gate_mode() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for name in ANSATZ_NAMES {
            let mut g = QfmModel::new(&ansatz_by_name(name, 3).unwrap(), 2, Mode::Gate).unwrap();
            for _ in 0..17 {
                g.randomize_theta(&mut rng);
                let x = rng.random_range(0.0..TAU);
                let f = g.forward(x);
                for mode in [Mode::Decomposed, Mode::Pulse] {
                    assert!((g.with_mode(mode).forward(x) - f).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn bounded_and_periodic() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut m = QfmModel::new(&ansatz_by_name("rot_cry", 3).unwrap(), 2, Mode::Gate).unwrap();
        for _ in 0..200 {
            m.randomize_theta(&mut rng);
            let x = rng.random_range(-10.0..10.0);
            let f = m.forward(x);
            assert!(f.abs() <= 1.0 + 1e-12);
            assert!((m.forward(x + TAU) - f).abs() < 1e-10);
        }
    }

    #[test]
    fn parameter_shift_matches_finite_differences() {
        let xs = [0.1, 1.3, 4.0];
        for (i, name) in ["basis_rx", "ry_crz", "rot_crx"].iter().enumerate() {
            for mode in Mode::ALL {
                let m = random_model(name, mode, 100 + 3 * i as u64 + mode as u64);
                let analytic = m.parameter_gradients(&xs);
                let p0 = m.trainable();
                let fd = central_differences(
                    |p| {
                        let mut mm = m.clone();
                        mm.set_trainable(p).unwrap();
                        mm.evaluate(&xs)
                    },
                    &p0,
                    1e-5,
                );
                for (a, b) in analytic.iter().flatten().zip(fd.iter().flatten()) {
                    assert!((a - b).abs() < 1e-7, "{name} {mode}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn trainable_roundtrip() {
        let mut m = random_model("ry_crz", Mode::Pulse, 1);
        let mut p = m.trainable();
        assert_eq!(p.len(), m.theta().len() + m.lambda().len());
        p[0] += 1.0;
        let last = p.len() - 1;
        p[last] = 2.0;
        m.set_trainable(&p).unwrap();
        assert_eq!(m.trainable(), p);
        assert_eq!(m.lambda()[m.lambda().len() - 1], 2.0);
    }
}

//! Logical gates, exact unitaries, and their decompositions into the basis set
//! {RX, RY, RZ, CZ}.
//!
//! Rotations use the half-angle convention `R_P(γ) = exp(−iγP/2)`. Sub-gate
//! sequences are stored in application order: the first entry acts first, so
//! the matrix of a rule is the product of its sub-gates read right to left.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI};
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use thiserror::Error;

use crate::linalg::{UnitaryMatrix, C64, I, ONE, ZERO};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GateError {
    #[error("{kind} takes {expected} angle(s), got {got}")]
    WrongAngleCount {
        kind: GateKind,
        expected: usize,
        got: usize,
    },
    #[error("unknown gate kind `{0}`")]
    UnknownGate(String),
    #[error("invalid decomposition rule `{name}`: {reason}")]
    InvalidRule { name: String, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GateKind {
    Rx,
    Ry,
    Rz,
    H,
    Rot,
    Cz,
    Cx,
    Cy,
    Crx,
    Cry,
    Crz,
}

impl GateKind {
    pub const ALL: [GateKind; 11] = [
        GateKind::Rx,
        GateKind::Ry,
        GateKind::Rz,
        GateKind::H,
        GateKind::Rot,
        GateKind::Cz,
        GateKind::Cx,
        GateKind::Cy,
        GateKind::Crx,
        GateKind::Cry,
        GateKind::Crz,
    ];

    pub fn name(self) -> &'static str {
        match self {
            GateKind::Rx => "RX",
            GateKind::Ry => "RY",
            GateKind::Rz => "RZ",
            GateKind::H => "H",
            GateKind::Rot => "Rot",
            GateKind::Cz => "CZ",
            GateKind::Cx => "CX",
            GateKind::Cy => "CY",
            GateKind::Crx => "CRX",
            GateKind::Cry => "CRY",
            GateKind::Crz => "CRZ",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            GateKind::Rx | GateKind::Ry | GateKind::Rz | GateKind::H | GateKind::Rot => 1,
            _ => 2,
        }
    }

    pub fn is_basis(self) -> bool {
        matches!(self, GateKind::Rx | GateKind::Ry | GateKind::Rz | GateKind::Cz)
    }

    /// Single-axis rotation (RX, RY, RZ).
    pub fn is_rotation(self) -> bool {
        matches!(self, GateKind::Rx | GateKind::Ry | GateKind::Rz)
    }

    pub fn angle_count(self) -> usize {
        match self {
            GateKind::H | GateKind::Cz | GateKind::Cx | GateKind::Cy => 0,
            GateKind::Rot => 3,
            _ => 1,
        }
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GateKind {
    type Err = GateError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        GateKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| GateError::UnknownGate(s.to_string()))
    }
}

/// Pulse-parameter count of a leaf gate, including its time parameter.
fn basis_pulse_params(kind: GateKind) -> Option<usize> {
    match kind {
        GateKind::Rz | GateKind::Cz => Some(1),
        GateKind::Rx | GateKind::Ry => Some(3),
        _ => None,
    }
}

/// Published pulse-parameter counts per gate.
pub fn table_pulse_params(kind: GateKind) -> usize {
    match kind {
        GateKind::Rz | GateKind::Cz => 1,
        GateKind::Rx | GateKind::Ry => 3,
        GateKind::H => 4,
        GateKind::Rot => 5,
        GateKind::Cx => 9,
        GateKind::Cy => 11,
        GateKind::Crz => 20,
        GateKind::Cry => 24,
        GateKind::Crx => 26,
    }
}

fn rotation(axis: GateKind, angle: f64) -> UnitaryMatrix {
    let (c, s) = ((angle / 2.0).cos(), (angle / 2.0).sin());
    match axis {
        GateKind::Rx => UnitaryMatrix::from_2x2(
            C64::new(c, 0.0),
            C64::new(0.0, -s),
            C64::new(0.0, -s),
            C64::new(c, 0.0),
        ),
        GateKind::Ry => UnitaryMatrix::from_2x2(
            C64::new(c, 0.0),
            C64::new(-s, 0.0),
            C64::new(s, 0.0),
            C64::new(c, 0.0),
        ),
        GateKind::Rz => {
            UnitaryMatrix::from_2x2(C64::new(c, -s), ZERO, ZERO, C64::new(c, s))
        }
        _ => unreachable!("not a rotation axis"),
    }
}

fn controlled(target: &UnitaryMatrix) -> UnitaryMatrix {
    let mut data = vec![ZERO; 16];
    data[0] = ONE;
    data[5] = ONE;
    for r in 0..2 {
        for c in 0..2 {
            data[(r + 2) * 4 + c + 2] = target.get(r, c);
        }
    }
    UnitaryMatrix::new(4, data).expect("4x4")
}

/// Exact unitary of a logical gate. Controlled gates use `targets = [control, target]`
/// ordering, i.e. the control is the high bit of the local index.
pub fn gate_unitary(kind: GateKind, angles: &[f64]) -> Result<UnitaryMatrix, GateError> {
    if angles.len() != kind.angle_count() {
        return Err(GateError::WrongAngleCount {
            kind,
            expected: kind.angle_count(),
            got: angles.len(),
        });
    }
    let h = FRAC_1_SQRT_2;
    Ok(match kind {
        GateKind::Rx | GateKind::Ry | GateKind::Rz => rotation(kind, angles[0]),
        GateKind::H => UnitaryMatrix::from_2x2(
            C64::new(h, 0.0),
            C64::new(h, 0.0),
            C64::new(h, 0.0),
            C64::new(-h, 0.0),
        ),
        GateKind::Rot => rotation(GateKind::Rz, angles[2])
            .mul(&rotation(GateKind::Ry, angles[1]))
            .mul(&rotation(GateKind::Rz, angles[0])),
        GateKind::Cz => controlled(&UnitaryMatrix::from_2x2(ONE, ZERO, ZERO, -ONE)),
        GateKind::Cx => controlled(&UnitaryMatrix::from_2x2(ZERO, ONE, ONE, ZERO)),
        GateKind::Cy => controlled(&UnitaryMatrix::from_2x2(ZERO, -I, I, ZERO)),
        GateKind::Crx => controlled(&rotation(GateKind::Rx, angles[0])),
        GateKind::Cry => controlled(&rotation(GateKind::Ry, angles[0])),
        GateKind::Crz => controlled(&rotation(GateKind::Rz, angles[0])),
    })
}

/// Angle carried by one sub-gate as a function of the logical angles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SubAngle {
    /// No angle (CZ, CX, H slots).
    Free,
    /// θ-independent angle, e.g. the RZ(±π/2) frame changes inside CRX.
    Fixed(f64),
    /// `coeff · θ[param]`.
    Linear { param: usize, coeff: f64 },
}

impl SubAngle {
    pub fn value(&self, theta: &[f64]) -> Option<f64> {
        match *self {
            SubAngle::Free => None,
            SubAngle::Fixed(v) => Some(v),
            SubAngle::Linear { param, coeff } => Some(coeff * theta[param]),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubGate {
    pub kind: GateKind,
    pub angle: SubAngle,
    /// Wires within the logical gate (0 = control for two-qubit gates).
    pub wires: Vec<usize>,
}

impl SubGate {
    pub fn rot(kind: GateKind, angle: SubAngle, wire: usize) -> Self {
        Self {
            kind,
            angle,
            wires: vec![wire],
        }
    }

    pub fn fixed(kind: GateKind, wires: &[usize]) -> Self {
        Self {
            kind,
            angle: SubAngle::Free,
            wires: wires.to_vec(),
        }
    }

    pub fn is_rotation(&self) -> bool {
        self.kind.is_rotation()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecompositionRule {
    name: String,
    kind: Option<GateKind>,
    arity: usize,
    n_params: usize,
    sub_gates: Vec<SubGate>,
    pulse_param_count: usize,
}

impl DecompositionRule {
    /// A user-defined composite gate built from rotations and parameterless
    /// library gates. Its unitary is the product of its sub-gates.
    pub fn custom(
        name: &str,
        arity: usize,
        n_params: usize,
        sub_gates: Vec<SubGate>,
    ) -> Result<Self, GateError> {
        let invalid = |reason: String| GateError::InvalidRule {
            name: name.to_string(),
            reason,
        };
        if !(1..=2).contains(&arity) {
            return Err(invalid(format!("arity {arity} not supported")));
        }
        for (i, sg) in sub_gates.iter().enumerate() {
            if sg.wires.len() != sg.kind.arity() || sg.wires.iter().any(|&w| w >= arity) {
                return Err(invalid(format!("sub-gate {i} has bad wires {:?}", sg.wires)));
            }
            match (sg.kind.is_rotation(), sg.angle) {
                (true, SubAngle::Free) => {
                    return Err(invalid(format!("rotation sub-gate {i} has no angle")))
                }
                (false, SubAngle::Free) if sg.kind.angle_count() == 0 => {}
                (false, _) => {
                    return Err(invalid(format!("sub-gate {i} ({}) must be a rotation or parameterless", sg.kind)))
                }
                (true, SubAngle::Linear { param, .. }) if param >= n_params => {
                    return Err(invalid(format!("sub-gate {i} references parameter {param}")))
                }
                _ => {}
            }
        }
        let pulse_param_count = sub_gates.iter().map(|sg| leaf_count(sg.kind)).sum();
        Ok(Self {
            name: name.to_string(),
            kind: None,
            arity,
            n_params,
            sub_gates,
            pulse_param_count,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> Option<GateKind> {
        self.kind
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    /// Number of logical angles.
    pub fn n_params(&self) -> usize {
        self.n_params
    }

    pub fn sub_gates(&self) -> &[SubGate] {
        &self.sub_gates
    }

    pub fn pulse_param_count(&self) -> usize {
        self.pulse_param_count
    }

    pub fn is_basis(&self) -> bool {
        self.kind.is_some_and(GateKind::is_basis)
    }

    /// Indices of the sub-gates that are single-axis rotations.
    pub fn rotation_slots(&self) -> Vec<usize> {
        (0..self.sub_gates.len())
            .filter(|&i| self.sub_gates[i].is_rotation())
            .collect()
    }

    /// Whether one logical angle drives two or more sub-rotations. These are
    /// the gates whose independently scaled sub-gates can leave the gate family.
    pub fn shares_angle(&self) -> bool {
        (0..self.n_params).any(|p| {
            self.sub_gates
                .iter()
                .filter(|sg| matches!(sg.angle, SubAngle::Linear { param, .. } if param == p))
                .count()
                >= 2
        })
    }

    /// Per-sub-gate angles `g_m(θ)`, `None` for angle-free slots.
    pub fn sub_angles(&self, theta: &[f64]) -> Result<Vec<Option<f64>>, GateError> {
        self.check_params(theta)?;
        Ok(self.sub_gates.iter().map(|sg| sg.angle.value(theta)).collect())
    }

    fn check_params(&self, theta: &[f64]) -> Result<(), GateError> {
        if theta.len() != self.n_params {
            return Err(match self.kind {
                Some(kind) => GateError::WrongAngleCount {
                    kind,
                    expected: self.n_params,
                    got: theta.len(),
                },
                None => GateError::InvalidRule {
                    name: self.name.clone(),
                    reason: format!("expected {} angles, got {}", self.n_params, theta.len()),
                },
            });
        }
        Ok(())
    }

    /// Ordered product of sub-gate unitaries with the given effective angles.
    /// `angles[m]` is ignored for angle-free slots.
    pub fn realise(&self, angles: &[Option<f64>]) -> UnitaryMatrix {
        debug_assert_eq!(angles.len(), self.sub_gates.len());
        let mut u = UnitaryMatrix::identity(1 << self.arity);
        for (sg, a) in self.sub_gates.iter().zip(angles) {
            let g = if sg.is_rotation() {
                rotation(sg.kind, a.expect("rotation slot needs an angle"))
            } else {
                gate_unitary(sg.kind, &[]).expect("parameterless sub-gate")
            };
            // local wire w is bit (arity-1-w) of the local index
            let targets: Vec<usize> = sg.wires.iter().map(|&w| self.arity - 1 - w).collect();
            u.left_apply(&g, &targets).expect("sub-gate wires validated");
        }
        u
    }

    /// Product of the decomposition at logical angles `theta`.
    pub fn product(&self, theta: &[f64]) -> Result<UnitaryMatrix, GateError> {
        Ok(self.realise(&self.sub_angles(theta)?))
    }

    /// Exact unitary: the library matrix for standard kinds, the product otherwise.
    pub fn unitary(&self, theta: &[f64]) -> Result<UnitaryMatrix, GateError> {
        match self.kind {
            Some(kind) => gate_unitary(kind, theta),
            None => self.product(theta),
        }
    }
}

fn leaf_count(kind: GateKind) -> usize {
    basis_pulse_params(kind).unwrap_or_else(|| decompose(kind).pulse_param_count)
}

fn sub_gates_of(kind: GateKind) -> Vec<SubGate> {
    use GateKind::*;
    use SubAngle::{Fixed, Linear};
    let th = |coeff: f64| Linear { param: 0, coeff };
    match kind {
        Rx | Ry | Rz => vec![SubGate::rot(kind, th(1.0), 0)],
        Cz => vec![SubGate::fixed(Cz, &[0, 1])],
        // RY(π/2)·RZ(π) = −i·H
        H => vec![
            SubGate::rot(Rz, Fixed(PI), 0),
            SubGate::rot(Ry, Fixed(FRAC_PI_2), 0),
        ],
        Rot => vec![
            SubGate::rot(Rz, Linear { param: 0, coeff: 1.0 }, 0),
            SubGate::rot(Ry, Linear { param: 1, coeff: 1.0 }, 0),
            SubGate::rot(Rz, Linear { param: 2, coeff: 1.0 }, 0),
        ],
        Cx => vec![
            SubGate::fixed(H, &[1]),
            SubGate::fixed(Cz, &[0, 1]),
            SubGate::fixed(H, &[1]),
        ],
        Cy => vec![
            SubGate::rot(Rz, Fixed(-FRAC_PI_2), 1),
            SubGate::fixed(Cx, &[0, 1]),
            SubGate::rot(Rz, Fixed(FRAC_PI_2), 1),
        ],
        Crz => vec![
            SubGate::rot(Rz, th(0.5), 1),
            SubGate::fixed(Cx, &[0, 1]),
            SubGate::rot(Rz, th(-0.5), 1),
            SubGate::fixed(Cx, &[0, 1]),
        ],
        Cry => vec![
            SubGate::rot(Ry, th(0.5), 1),
            SubGate::fixed(Cx, &[0, 1]),
            SubGate::rot(Ry, th(-0.5), 1),
            SubGate::fixed(Cx, &[0, 1]),
        ],
        Crx => vec![
            SubGate::rot(Rz, Fixed(FRAC_PI_2), 1),
            SubGate::rot(Ry, th(0.5), 1),
            SubGate::fixed(Cx, &[0, 1]),
            SubGate::rot(Ry, th(-0.5), 1),
            SubGate::fixed(Cx, &[0, 1]),
            SubGate::rot(Rz, Fixed(-FRAC_PI_2), 1),
        ],
    }
}

fn registry() -> &'static [DecompositionRule] {
    static REGISTRY: OnceLock<Vec<DecompositionRule>> = OnceLock::new();
    REGISTRY.get_or_init(|| {
        // GateKind::ALL lists inner gates (H, CZ, CX) before their users, so
        // nested counts resolve against rules already built.
        let mut rules: Vec<DecompositionRule> = Vec::with_capacity(GateKind::ALL.len());
        for kind in GateKind::ALL {
            let sub_gates = sub_gates_of(kind);
            let pulse_param_count = basis_pulse_params(kind).unwrap_or_else(|| {
                sub_gates
                    .iter()
                    .map(|sg| {
                        basis_pulse_params(sg.kind).unwrap_or_else(|| {
                            rules
                                .iter()
                                .find(|r| r.kind == Some(sg.kind))
                                .expect("inner gate registered first")
                                .pulse_param_count
                        })
                    })
                    .sum()
            });
            rules.push(DecompositionRule {
                name: kind.name().to_string(),
                kind: Some(kind),
                arity: kind.arity(),
                n_params: kind.angle_count(),
                sub_gates,
                pulse_param_count,
            });
        }
        rules
    })
}

/// Decomposition of `kind` into basis gates and parameterless inner gates.
/// Basis gates return a single-element rule.
pub fn decompose(kind: GateKind) -> &'static DecompositionRule {
    &registry()[GateKind::ALL.iter().position(|&k| k == kind).expect("registered")]
}

/// `(g_1(θ), …, g_M(θ))` for the decomposition of `kind`; angle-free slots are `None`.
pub fn sub_angle_vector(kind: GateKind, theta: &[f64]) -> Result<Vec<Option<f64>>, GateError> {
    decompose(kind).sub_angles(theta)
}

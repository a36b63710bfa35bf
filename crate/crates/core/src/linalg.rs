//! Dense complex linear algebra for small registers.
//!
//! Qubit 0 is the least-significant bit of an amplitude index. A gate acting on
//! `targets = [t0, t1, ...]` sees `t0` as the most-significant bit of its own
//! local index, so the textbook CNOT matrix with `targets = [control, target]`
//! behaves as expected.

use nalgebra::DMatrix;
use num_complex::Complex64;
use thiserror::Error;

pub type C64 = Complex64;

/// Real matrix type used for Jacobians and rank computations.
pub type RealMatrix = DMatrix<f64>;

/// Largest register the simulator accepts.
pub const MAX_QUBITS: usize = 5;

/// Relative singular-value cutoff used by [`real_rank`] unless a caller overrides it.
pub const DEFAULT_RANK_TOL: f64 = 1e-8;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("register of {0} qubits exceeds the supported maximum of {MAX_QUBITS}")]
    TooManyQubits(usize),
    #[error("amplitude vector length {0} is not a power of two")]
    NotPowerOfTwo(usize),
    #[error("gate acts on {gate} qubits but {targets} targets were given")]
    ArityMismatch { gate: usize, targets: usize },
    #[error("target qubit {0} is out of range for a {1}-qubit register")]
    TargetOutOfRange(usize, usize),
    #[error("target qubit {0} appears more than once")]
    RepeatedTarget(usize),
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("matrix data has {len} entries, expected {dim}x{dim}")]
    BadMatrixData { len: usize, dim: usize },
    #[error("matrix contains non-finite entries")]
    NonFinite,
}

fn log2_exact(len: usize) -> Result<usize, LinalgError> {
    if len == 0 || !len.is_power_of_two() {
        return Err(LinalgError::NotPowerOfTwo(len));
    }
    Ok(len.trailing_zeros() as usize)
}

/// Pure state of an `n`-qubit register.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amps: Vec<C64>,
    n_qubits: usize,
}

impl StateVector {
    /// The computational basis state |0…0⟩.
    pub fn zero(n_qubits: usize) -> Result<Self, LinalgError> {
        Self::basis(n_qubits, 0)
    }

    pub fn basis(n_qubits: usize, index: usize) -> Result<Self, LinalgError> {
        if n_qubits > MAX_QUBITS {
            return Err(LinalgError::TooManyQubits(n_qubits));
        }
        let dim = 1usize << n_qubits;
        if index >= dim {
            return Err(LinalgError::TargetOutOfRange(index, n_qubits));
        }
        let mut amps = vec![ZERO; dim];
        amps[index] = ONE;
        Ok(Self { amps, n_qubits })
    }

    /// Wraps raw amplitudes. The vector is taken as given; callers that need a
    /// physical state should normalise first.
    pub fn from_amplitudes(amps: Vec<C64>) -> Result<Self, LinalgError> {
        let n_qubits = log2_exact(amps.len())?;
        if n_qubits > MAX_QUBITS {
            return Err(LinalgError::TooManyQubits(n_qubits));
        }
        Ok(Self { amps, n_qubits })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn normalised(mut self) -> Self {
        let n = self.norm_sqr().sqrt();
        if n > 0.0 {
            self.amps.iter_mut().for_each(|a| *a /= n);
        }
        self
    }

    /// ⟨self|other⟩
    pub fn inner(&self, other: &StateVector) -> Result<C64, LinalgError> {
        if self.dim() != other.dim() {
            return Err(LinalgError::DimensionMismatch(self.dim(), other.dim()));
        }
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// Expectation value of Pauli Z on `qubit`.
    pub fn expectation_z(&self, qubit: usize) -> f64 {
        let mask = 1usize << qubit;
        self.amps
            .iter()
            .enumerate()
            .map(|(i, a)| if i & mask == 0 { a.norm_sqr() } else { -a.norm_sqr() })
            .sum()
    }

    /// Returns the state with `gate` applied to `targets`.
    pub fn apply_gate(
        &self,
        gate: &UnitaryMatrix,
        targets: &[usize],
    ) -> Result<StateVector, LinalgError> {
        let mut out = self.clone();
        out.apply_gate_in_place(gate, targets)?;
        Ok(out)
    }

    pub fn apply_gate_in_place(
        &mut self,
        gate: &UnitaryMatrix,
        targets: &[usize],
    ) -> Result<(), LinalgError> {
        check_targets(gate, targets, self.n_qubits)?;
        apply_to_slice(&mut self.amps, gate, targets);
        Ok(())
    }
}

fn check_targets(gate: &UnitaryMatrix, targets: &[usize], n: usize) -> Result<(), LinalgError> {
    let arity = gate.arity()?;
    if arity != targets.len() {
        return Err(LinalgError::ArityMismatch {
            gate: arity,
            targets: targets.len(),
        });
    }
    for (i, &t) in targets.iter().enumerate() {
        if t >= n {
            return Err(LinalgError::TargetOutOfRange(t, n));
        }
        if targets[..i].contains(&t) {
            return Err(LinalgError::RepeatedTarget(t));
        }
    }
    Ok(())
}

/// Applies `gate` to an amplitude slice without validation. Targets must be
/// distinct, in range, and match the gate arity.
pub(crate) fn apply_to_slice(amps: &mut [C64], gate: &UnitaryMatrix, targets: &[usize]) {
    let k = targets.len();
    let gdim = 1usize << k;
    // Bit position in the register for local bit j (local bit k-1-j belongs to targets[j]).
    let offsets: Vec<usize> = (0..gdim)
        .map(|local| {
            (0..k)
                .filter(|&j| local & (1 << (k - 1 - j)) != 0)
                .map(|j| 1usize << targets[j])
                .sum()
        })
        .collect();
    let target_mask: usize = targets.iter().map(|&t| 1usize << t).sum();
    let mut buf = [ZERO; 1 << MAX_QUBITS];
    for base in 0..amps.len() {
        if base & target_mask != 0 {
            continue;
        }
        for (l, off) in offsets.iter().enumerate() {
            buf[l] = amps[base | off];
        }
        for (r, off) in offsets.iter().enumerate() {
            let row = &gate.data[r * gdim..(r + 1) * gdim];
            amps[base | off] = row.iter().zip(&buf[..gdim]).map(|(g, a)| g * a).sum();
        }
    }
}

/// Dense square complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryMatrix {
    dim: usize,
    data: Vec<C64>,
}

impl UnitaryMatrix {
    pub fn identity(dim: usize) -> Self {
        let mut data = vec![ZERO; dim * dim];
        for i in 0..dim {
            data[i * dim + i] = ONE;
        }
        Self { dim, data }
    }

    pub fn new(dim: usize, data: Vec<C64>) -> Result<Self, LinalgError> {
        if data.len() != dim * dim {
            return Err(LinalgError::BadMatrixData {
                len: data.len(),
                dim,
            });
        }
        Ok(Self { dim, data })
    }

    /// Builds a 2×2 matrix from its entries in row-major order.
    pub fn from_2x2(a: C64, b: C64, c: C64, d: C64) -> Self {
        Self {
            dim: 2,
            data: vec![a, b, c, d],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of qubits the matrix acts on.
    pub fn arity(&self) -> Result<usize, LinalgError> {
        log2_exact(self.dim)
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.data[row * self.dim + col]
    }

    pub fn entries(&self) -> &[C64] {
        &self.data
    }

    /// Matrix product `self · rhs`.
    pub fn mul(&self, rhs: &UnitaryMatrix) -> UnitaryMatrix {
        assert_eq!(self.dim, rhs.dim, "matrix dimension mismatch");
        let n = self.dim;
        let mut data = vec![ZERO; n * n];
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == ZERO {
                    continue;
                }
                for j in 0..n {
                    data[i * n + j] += a * rhs.data[k * n + j];
                }
            }
        }
        UnitaryMatrix { dim: n, data }
    }

    pub fn adjoint(&self) -> UnitaryMatrix {
        let n = self.dim;
        let mut data = vec![ZERO; n * n];
        for i in 0..n {
            for j in 0..n {
                data[j * n + i] = self.data[i * n + j].conj();
            }
        }
        UnitaryMatrix { dim: n, data }
    }

    pub fn scale(&self, s: C64) -> UnitaryMatrix {
        UnitaryMatrix {
            dim: self.dim,
            data: self.data.iter().map(|x| x * s).collect(),
        }
    }

    /// Kronecker product `self ⊗ rhs`; `self` occupies the high bits.
    pub fn kron(&self, rhs: &UnitaryMatrix) -> UnitaryMatrix {
        let (a, b) = (self.dim, rhs.dim);
        let n = a * b;
        let mut data = vec![ZERO; n * n];
        for i in 0..a {
            for j in 0..a {
                let x = self.data[i * a + j];
                for k in 0..b {
                    for l in 0..b {
                        data[(i * b + k) * n + (j * b + l)] = x * rhs.data[k * b + l];
                    }
                }
            }
        }
        UnitaryMatrix { dim: n, data }
    }

    /// Applies `gate` on `targets` to every column, i.e. returns `G_full · self`
    /// where `G_full` is `gate` embedded into this matrix's register.
    pub fn left_apply(&mut self, gate: &UnitaryMatrix, targets: &[usize]) -> Result<(), LinalgError> {
        let n = self.arity()?;
        check_targets(gate, targets, n)?;
        let dim = self.dim;
        let mut col = vec![ZERO; dim];
        for c in 0..dim {
            for r in 0..dim {
                col[r] = self.data[r * dim + c];
            }
            apply_to_slice(&mut col, gate, targets);
            for r in 0..dim {
                self.data[r * dim + c] = col[r];
            }
        }
        Ok(())
    }

    /// Matrix-vector product.
    pub fn apply(&self, state: &StateVector) -> Result<StateVector, LinalgError> {
        if state.dim() != self.dim {
            return Err(LinalgError::DimensionMismatch(self.dim, state.dim()));
        }
        let n = self.dim;
        let amps = (0..n)
            .map(|i| {
                self.data[i * n..(i + 1) * n]
                    .iter()
                    .zip(state.amplitudes())
                    .map(|(m, a)| m * a)
                    .sum()
            })
            .collect();
        StateVector::from_amplitudes(amps)
    }

    /// Column `c` as a state vector.
    pub fn column(&self, c: usize) -> StateVector {
        let amps = (0..self.dim).map(|r| self.data[r * self.dim + c]).collect();
        StateVector {
            amps,
            n_qubits: self.dim.trailing_zeros() as usize,
        }
    }

    pub fn max_abs_diff(&self, other: &UnitaryMatrix) -> f64 {
        assert_eq!(self.dim, other.dim, "matrix dimension mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Largest entrywise deviation after removing a global phase. The phase is
    /// taken from the largest-magnitude entry of `self`.
    pub fn phase_aligned_diff(&self, other: &UnitaryMatrix) -> f64 {
        assert_eq!(self.dim, other.dim, "matrix dimension mismatch");
        let (idx, _) = self
            .data
            .iter()
            .enumerate()
            .fold((0, -1.0), |best, (i, x)| if x.norm() > best.1 { (i, x.norm()) } else { best });
        let (a, b) = (self.data[idx], other.data[idx]);
        if b.norm() == 0.0 {
            return self.max_abs_diff(other);
        }
        let phase = (a / b) / (a / b).norm();
        self.max_abs_diff(&other.scale(phase))
    }

    /// max |(U†U − I)_ij|
    pub fn unitarity_defect(&self) -> f64 {
        self.adjoint().mul(self).max_abs_diff(&UnitaryMatrix::identity(self.dim))
    }
}

/// |⟨a|b⟩|²
pub fn fidelity(a: &StateVector, b: &StateVector) -> Result<f64, LinalgError> {
    Ok(a.inner(b)?.norm_sqr())
}

/// Trace distance ½‖ρ_a − ρ_b‖₁ between two pure states, which equals
/// √(1 − |⟨a|b⟩|²).
///
/// Evaluated through the Lagrange identity
/// `‖a‖²‖b‖² − |⟨a|b⟩|² = Σ_{i<j} |a_i b_j − a_j b_i|²`, which stays accurate
/// when the states differ only by a global phase plus rounding.
pub fn trace_distance(a: &StateVector, b: &StateVector) -> Result<f64, LinalgError> {
    if a.dim() != b.dim() {
        return Err(LinalgError::DimensionMismatch(a.dim(), b.dim()));
    }
    let (x, y) = (a.amplitudes(), b.amplitudes());
    let mut s = 0.0;
    for i in 0..x.len() {
        for j in (i + 1)..x.len() {
            s += (x[i] * y[j] - x[j] * y[i]).norm_sqr();
        }
    }
    Ok(s.sqrt().min(1.0))
}

/// Number of singular values above `relative_tolerance × σ_max`.
pub fn real_rank(matrix: &RealMatrix, relative_tolerance: f64) -> Result<usize, LinalgError> {
    if matrix.iter().any(|x| !x.is_finite()) {
        return Err(LinalgError::NonFinite);
    }
    if matrix.nrows() == 0 || matrix.ncols() == 0 {
        return Ok(0);
    }
    let sv = matrix.clone().singular_values();
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    if smax == 0.0 {
        return Ok(0);
    }
    Ok(sv.iter().filter(|&&s| s > relative_tolerance * smax).count())
}

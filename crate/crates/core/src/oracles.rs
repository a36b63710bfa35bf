//! Slow, independent reference implementations used to check the fast paths.

use std::collections::BTreeMap;

use num_complex::Complex64 as C64;

use crate::gates::gate_unitary;
use crate::gates::GateKind;
use crate::linalg::UnitaryMatrix;
use crate::model::{Layer, Mode, QfmModel};

/// Adaptive Simpson quadrature of `f` over `[a, b]`.
pub fn integrate<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        (m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb))
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        m: f64,
        fm: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let (lm, flm, left) = simpson(f, a, fa, m, fm);
        let (rm, frm, right) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        let floor = 64.0 * f64::EPSILON * (left + right).abs();
        if depth == 0 || delta.abs() <= 15.0 * tol.max(floor) {
            return left + right + delta / 15.0;
        }
        recurse(f, a, fa, m, fm, lm, flm, left, tol / 2.0, depth - 1)
            + recurse(f, m, fm, b, fb, rm, frm, right, tol / 2.0, depth - 1)
    }
    let (fa, fb) = (f(a), f(b));
    let (m, fm, whole) = simpson(f, a, fa, b, fb);
    recurse(f, a, fa, b, fb, m, fm, whole, tol, 50)
}

/// Central finite-difference Jacobian of `f` at `p`; entry `[i][k]` is `∂f_k/∂p_i`.
pub fn central_differences<F: Fn(&[f64]) -> Vec<f64>>(f: F, p: &[f64], h: f64) -> Vec<Vec<f64>> {
    (0..p.len())
        .map(|i| {
            let mut plus = p.to_vec();
            let mut minus = p.to_vec();
            plus[i] += h;
            minus[i] -= h;
            f(&plus)
                .into_iter()
                .zip(f(&minus))
                .map(|(a, b)| (a - b) / (2.0 * h))
                .collect()
        })
        .collect()
}

/// Frequencies and multiplicities from counting every choice of per-qubit,
/// per-layer gap in `{−s, 0, +s}`. Frequencies are keyed by `round(ω·scale)`.
pub fn brute_force_spectrum(scalings: &[f64], layers: usize, key_scale: f64) -> BTreeMap<i64, usize> {
    let terms: Vec<f64> = (0..layers).flat_map(|_| scalings.iter().copied()).collect();
    let total = 3usize.pow(terms.len() as u32);
    let mut out = BTreeMap::new();
    for mut code in 0..total {
        let mut w = 0.0;
        for s in &terms {
            w += (code % 3) as f64 * s - s;
            code /= 3;
        }
        *out.entry((w * key_scale).round() as i64).or_insert(0) += 1;
    }
    out
}

/// Embeds a `k`-qubit gate acting on `targets` (first target = most significant
/// local bit) into an `n`-qubit register by enumerating basis states.
pub fn embed(gate: &UnitaryMatrix, targets: &[usize], n: usize) -> Vec<Vec<C64>> {
    let dim = 1usize << n;
    let k = targets.len();
    let mut full = vec![vec![C64::new(0.0, 0.0); dim]; dim];
    for col in 0..dim {
        let local_in = (0..k).fold(0, |acc, t| (acc << 1) | ((col >> targets[t]) & 1));
        for local_out in 0..(1 << k) {
            let mut row = col;
            for (t, &q) in targets.iter().enumerate() {
                let bit = (local_out >> (k - 1 - t)) & 1;
                row = (row & !(1 << q)) | (bit << q);
            }
            full[row][col] += gate.get(local_out, local_in);
        }
    }
    full
}

fn matmul(a: &[Vec<C64>], b: &[Vec<C64>]) -> Vec<Vec<C64>> {
    let n = a.len();
    let mut c = vec![vec![C64::new(0.0, 0.0); n]; n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i][k];
            for j in 0..n {
                c[i][j] += aik * b[k][j];
            }
        }
    }
    c
}

/// Dense reference evaluation of a model: builds the full circuit matrix
/// gate by gate, with every gate assembled from its sub-gate list.
pub fn reference_forward(model: &QfmModel, x: f64, observable_qubit: usize) -> f64 {
    let n = model.n_qubits();
    let dim = 1usize << n;
    let mut total: Vec<Vec<C64>> = (0..dim)
        .map(|i| (0..dim).map(|j| C64::new((i == j) as u8 as f64, 0.0)).collect())
        .collect();
    let theta = model.theta();
    let scales: &[f64] = match model.mode() {
        Mode::Gate => &[],
        Mode::Decomposed => model.decomposition_scales(),
        Mode::Pulse => model.lambda(),
    };
    let (mut t_off, mut s_off) = (0, 0);
    for layer in model.layers() {
        match layer {
            Layer::Encoding => {
                for (q, s) in model.encoding().scalings().iter().enumerate() {
                    let g = gate_unitary(GateKind::Rx, &[s * x]).unwrap();
                    total = matmul(&embed(&g, &[q], n), &total);
                }
            }
            Layer::Trainable(a) => {
                for g in a.gates() {
                    let rule = g.rule();
                    let th = &theta[t_off..t_off + rule.n_params()];
                    t_off += rule.n_params();
                    let scaled = match model.mode() {
                        Mode::Gate => false,
                        Mode::Decomposed => !rule.is_basis(),
                        Mode::Pulse => true,
                    };
                    let arity = rule.arity();
                    let mut local: Vec<Vec<C64>> = (0..1 << arity)
                        .map(|i| (0..1 << arity).map(|j| C64::new((i == j) as u8 as f64, 0.0)).collect())
                        .collect();
                    for sg in rule.sub_gates() {
                        let u = match sg.angle.value(th) {
                            Some(mut a) => {
                                if scaled {
                                    a *= scales[s_off];
                                    s_off += 1;
                                }
                                gate_unitary(sg.kind, &[a]).unwrap()
                            }
                            None => gate_unitary(sg.kind, &[]).unwrap(),
                        };
                        let targets: Vec<usize> = sg.wires.iter().map(|&w| arity - 1 - w).collect();
                        local = matmul(&embed(&u, &targets, arity), &local);
                    }
                    let local_u = UnitaryMatrix::new(
                        1 << arity,
                        local.into_iter().flatten().collect(),
                    )
                    .unwrap();
                    total = matmul(&embed(&local_u, g.wires(), n), &total);
                }
            }
        }
    }
    (0..dim)
        .map(|i| {
            let sign = if (i >> observable_qubit) & 1 == 0 { 1.0 } else { -1.0 };
            sign * total[i][0].norm_sqr()
        })
        .sum()
}

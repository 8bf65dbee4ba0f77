//! Independent reference implementations used by the integration tests.
#![allow(dead_code)]

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;

use fsl_qnlp::circuit::{Angle, CircuitIR, Gate, ParamRef, ParamScope, ParamStore, ParamMode};

pub type C = Complex64;

pub fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

fn pauli(p: char) -> DMatrix<C> {
    let z = c(0.0, 0.0);
    let o = c(1.0, 0.0);
    let i = c(0.0, 1.0);
    match p {
        'I' => DMatrix::from_row_slice(2, 2, &[o, z, z, o]),
        'X' => DMatrix::from_row_slice(2, 2, &[z, o, o, z]),
        'Y' => DMatrix::from_row_slice(2, 2, &[z, -i, i, z]),
        'Z' => DMatrix::from_row_slice(2, 2, &[o, z, z, -o]),
        _ => unreachable!(),
    }
}

/// exp(−iθP/2) = cos(θ/2)·I − i·sin(θ/2)·P
pub fn rotation(p: char, theta: f64) -> DMatrix<C> {
    pauli('I') * c((theta / 2.0).cos(), 0.0) - pauli(p) * c(0.0, (theta / 2.0).sin())
}

pub fn hadamard() -> DMatrix<C> {
    (pauli('X') + pauli('Z')) * c(std::f64::consts::FRAC_1_SQRT_2, 0.0)
}

fn projector(bit: u8) -> DMatrix<C> {
    let mut m = DMatrix::from_element(2, 2, c(0.0, 0.0));
    m[(bit as usize, bit as usize)] = c(1.0, 0.0);
    m
}

/// Tensor product with qubit 0 leftmost (most significant).
fn embed(n: usize, ops: &[(usize, DMatrix<C>)]) -> DMatrix<C> {
    let mut out = DMatrix::from_element(1, 1, c(1.0, 0.0));
    for q in 0..n {
        let op = ops
            .iter()
            .find(|(k, _)| *k == q)
            .map(|(_, m)| m.clone())
            .unwrap_or_else(|| pauli('I'));
        out = out.kronecker(&op);
    }
    out
}

fn controlled(n: usize, control: usize, target: usize, u: DMatrix<C>) -> DMatrix<C> {
    embed(n, &[(control, projector(0))]) + embed(n, &[(control, projector(1)), (target, u)])
}

pub fn gate_matrix(n: usize, gate: &Gate, theta: f64) -> DMatrix<C> {
    match *gate {
        Gate::H { qubit } => embed(n, &[(qubit, hadamard())]),
        Gate::Rx { qubit, .. } => embed(n, &[(qubit, rotation('X', theta))]),
        Gate::Ry { qubit, .. } => embed(n, &[(qubit, rotation('Y', theta))]),
        Gate::Rz { qubit, .. } => embed(n, &[(qubit, rotation('Z', theta))]),
        Gate::CRx { control, target, .. } => controlled(n, control, target, rotation('X', theta)),
        Gate::CRz { control, target, .. } => controlled(n, control, target, rotation('Z', theta)),
        Gate::Cnot { control, target } => controlled(n, control, target, pauli('X')),
    }
}

/// Full unitary of the gate list as a dense matrix product.
pub fn dense_unitary(n: usize, gates: &[Gate], angle: impl Fn(&Angle) -> f64) -> DMatrix<C> {
    let mut u = DMatrix::<C>::identity(1 << n, 1 << n);
    for g in gates {
        let theta = g.angle().map(&angle).unwrap_or(0.0);
        u = gate_matrix(n, g, theta) * u;
    }
    u
}

pub fn dense_state(n: usize, gates: &[Gate], angle: impl Fn(&Angle) -> f64) -> Vec<C> {
    let u = dense_unitary(n, gates, angle);
    u.column(0).iter().copied().collect()
}

/// Projects, reads the sentence qubits in their listed order and
/// normalises when the success probability is non-negligible.
pub fn dense_run(circuit: &CircuitIR, params: &ParamStore) -> (Vec<C>, f64) {
    let n = circuit.qubit_count;
    let psi = dense_state(n, &circuit.gates, |a| params.resolve(a).unwrap());
    let proj = embed(
        n,
        &circuit
            .postselect
            .iter()
            .map(|&(q, b)| (q, projector(b)))
            .collect::<Vec<_>>(),
    );
    let projected = &proj * DMatrix::from_column_slice(1 << n, 1, &psi);
    let success: f64 = projected.iter().map(|a| a.norm_sqr()).sum();

    let fixed: u64 = circuit
        .postselect
        .iter()
        .map(|&(q, b)| (b as u64) << (n - 1 - q))
        .sum();
    let m = circuit.sentence_qubits.len();
    let mut out = vec![c(0.0, 0.0); 1 << m];
    for (k, slot) in out.iter_mut().enumerate() {
        let mut idx = fixed;
        for (pos, &q) in circuit.sentence_qubits.iter().enumerate() {
            if k >> (m - 1 - pos) & 1 == 1 {
                idx |= 1 << (n - 1 - q);
            }
        }
        *slot = projected[idx as usize];
    }
    if success >= 1e-12 {
        let s = success.sqrt();
        out.iter_mut().for_each(|a| *a /= s);
    }
    (out, success)
}

pub fn param(i: usize) -> ParamRef {
    ParamRef::new(ParamScope::Word, "w", i)
}

/// Random circuit over the full gate set: ≤ `max_qubits` qubits, ≤ 50
/// gates, ≤ 2 post-selected qubits (outcome 0 or 1), the rest kept in a
/// shuffled order.
pub fn random_circuit<R: Rng>(rng: &mut R, max_qubits: usize) -> (CircuitIR, ParamStore) {
    let n = rng.random_range(1..=max_qubits);
    let mut circuit = CircuitIR::new(n);
    let mut store = ParamStore::new(ParamMode::Traditional);
    let count = rng.random_range(0..=50);
    let mut next = 0;
    for _ in 0..count {
        let kind = if n == 1 { rng.random_range(0..4) } else { rng.random_range(0..7) };
        let q = rng.random_range(0..n);
        let mut other = rng.random_range(0..n);
        while n > 1 && other == q {
            other = rng.random_range(0..n);
        }
        let mut angle = || -> Angle {
            let v = rng.random_range(-7.0..7.0);
            if next % 2 == 0 {
                let r = param(next);
                store.insert(r.clone(), v).unwrap();
                next += 1;
                r.into()
            } else {
                next += 1;
                v.into()
            }
        };
        let g = match kind {
            0 => Gate::H { qubit: q },
            1 => Gate::Rx { qubit: q, angle: angle() },
            2 => Gate::Ry { qubit: q, angle: angle() },
            3 => Gate::Rz { qubit: q, angle: angle() },
            4 => Gate::CRx { control: q, target: other, angle: angle() },
            5 => Gate::CRz { control: q, target: other, angle: angle() },
            _ => Gate::Cnot { control: q, target: other },
        };
        circuit.push(g);
    }
    let mut qubits: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        qubits.swap(i, rng.random_range(0..=i));
    }
    let posts = rng.random_range(0..=2.min(n - 1));
    for &q in &qubits[..posts] {
        circuit.postselect.push((q, rng.random_range(0..=1u8)));
    }
    circuit.sentence_qubits = qubits[posts..].to_vec();
    (circuit, store)
}

/// Standard normal via Box-Muller.
pub fn gaussian<R: Rng>(rng: &mut R) -> f64 {
    let u1: f64 = 1.0 - rng.random::<f64>();
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Haar-random pure state: a normalised complex Gaussian vector.
pub fn haar_state<R: Rng>(d: usize, rng: &mut R) -> Vec<C> {
    let v: Vec<C> = (0..d).map(|_| c(gaussian(rng), gaussian(rng))).collect();
    let n = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|a| a / n).collect()
}

pub fn overlap(a: &[C], b: &[C]) -> C {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Cyclic Jacobi eigen-decomposition of a symmetric matrix. Returns the
/// eigenvalues and the eigenvectors as columns.
pub fn jacobi_eigen(mut a: Vec<Vec<f64>>) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.len();
    let mut v = vec![vec![0.0; n]; n];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let cs = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * cs;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = cs * akp - sn * akq;
                    a[k][q] = sn * akp + cs * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = cs * apk - sn * aqk;
                    a[q][k] = sn * apk + cs * aqk;
                }
                for row in v.iter_mut() {
                    let (vkp, vkq) = (row[p], row[q]);
                    row[p] = cs * vkp - sn * vkq;
                    row[q] = sn * vkp + cs * vkq;
                }
            }
        }
    }
    ((0..n).map(|i| a[i][i]).collect(), v)
}

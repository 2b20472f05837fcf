#![allow(dead_code)]

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use transmon_twin::channels::{crosstalk_unitary, CMatrix};
use transmon_twin::transpile::{NoisyCircuit, NoisyOp};

pub fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Random mixed state of `n` qubits: `G G† / tr` for a Ginibre `G` of random rank.
pub fn random_density(n: usize, rng: &mut impl Rng) -> CMatrix {
    let dim = 1 << n;
    let rank = rng.random_range(1..=dim);
    let g = DMatrix::from_fn(dim, rank, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let rho = &g * g.adjoint();
    let tr = rho.trace();
    rho / tr
}

pub fn hermitian_eigenvalues(m: &CMatrix) -> DVector<f64> {
    let h = (m + m.adjoint()) * c(0.5);
    SymmetricEigen::new(h).eigenvalues
}

pub fn trace_distance(a: &CMatrix, b: &CMatrix) -> f64 {
    0.5 * hermitian_eigenvalues(&(a - b)).iter().map(|x| x.abs()).sum::<f64>()
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Full-register matrix of `op` acting on `positions` (position 0 is the
/// most significant bit), built entry by entry.
pub fn embed(op: &CMatrix, positions: &[usize], n: usize) -> CMatrix {
    let dim = 1usize << n;
    let bit = |p: usize| 1usize << (n - 1 - p);
    let mask = positions.iter().fold(0, |m, &p| m | bit(p));
    let local = |i: usize| {
        positions
            .iter()
            .fold(0, |acc, &p| (acc << 1) | usize::from(i & bit(p) != 0))
    };
    DMatrix::from_fn(dim, dim, |r, col| {
        if r & !mask == col & !mask {
            op[(local(r), local(col))]
        } else {
            c(0.0)
        }
    })
}

/// Superoperator `Σ conj(K) ⊗ K` acting on column-stacked density matrices.
pub fn superoperator(kraus: &[CMatrix]) -> CMatrix {
    let d = kraus[0].nrows();
    kraus
        .iter()
        .fold(CMatrix::zeros(d * d, d * d), |s, k| s + k.conjugate().kronecker(k))
}

/// Runs a noisy circuit by multiplying the column-stacked state with one
/// full-register superoperator per operation.
pub fn superoperator_chain(noisy: &NoisyCircuit) -> CMatrix {
    let n = noisy.register.len();
    let dim = 1usize << n;
    let pos = |q: &usize| noisy.position(*q).unwrap();
    let mut v = DVector::from_element(dim * dim, c(0.0));
    v[0] = c(1.0);
    for op in noisy.ops() {
        let kraus: Vec<CMatrix> = match op {
            NoisyOp::Gate { gate, .. } => {
                let Some(u) = gate.unitary() else { continue };
                let positions: Vec<usize> = gate.qubits.iter().map(pos).collect();
                vec![embed(&u, &positions, n)]
            }
            NoisyOp::Channel { qubits, spec, .. } => {
                let positions: Vec<usize> = qubits.iter().map(pos).collect();
                spec.build()
                    .unwrap()
                    .kraus()
                    .iter()
                    .map(|k| embed(k, &positions, n))
                    .collect()
            }
            NoisyOp::Crosstalk { edge, beta, duration } => {
                let positions = [pos(&edge.lo()), pos(&edge.hi())];
                vec![embed(&crosstalk_unitary(*beta, *duration), &positions, n)]
            }
        };
        v = superoperator(&kraus) * v;
    }
    DMatrix::from_column_slice(dim, dim, v.as_slice())
}

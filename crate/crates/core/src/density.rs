//! Dense density-matrix simulation over a small register.
//!
//! Register position 0 is the most significant bit of a basis index.

use nalgebra::SymmetricEigen;
use num_complex::Complex64;

use crate::channels::{CMatrix, QuantumChannel};
use crate::circuit::{Gate, GateKind};
use crate::error::{Error, Result};

/// Largest register the simulator accepts.
pub const MAX_QUBITS: usize = 6;

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    n: usize,
    data: CMatrix,
}

/// Basis-index offsets of the local basis states of `positions`, and the
/// mask of their bits.
fn offsets(positions: &[usize], n: usize) -> (Vec<usize>, usize) {
    let k = positions.len();
    let bits: Vec<usize> = positions.iter().map(|&p| 1 << (n - 1 - p)).collect();
    let mask = bits.iter().fold(0, |m, b| m | b);
    let offs = (0..1usize << k)
        .map(|l| {
            (0..k)
                .filter(|t| l >> (k - 1 - t) & 1 == 1)
                .fold(0, |acc, t| acc | bits[t])
        })
        .collect();
    (offs, mask)
}

impl DensityMatrix {
    /// `|0…0⟩⟨0…0|` on `n` qubits.
    pub fn zero_state(n: usize) -> Result<Self> {
        if n > MAX_QUBITS {
            return Err(Error::Capacity {
                needed: n,
                cap: MAX_QUBITS,
            });
        }
        let dim = 1 << n;
        let mut data = CMatrix::zeros(dim, dim);
        data[(0, 0)] = Complex64::new(1.0, 0.0);
        Ok(DensityMatrix { n, data })
    }

    pub fn from_matrix(data: CMatrix) -> Result<Self> {
        let dim = data.nrows();
        if dim != data.ncols() || !dim.is_power_of_two() {
            return Err(Error::validation("density matrix must be square with power-of-two size"));
        }
        let n = dim.trailing_zeros() as usize;
        if n > MAX_QUBITS {
            return Err(Error::Capacity {
                needed: n,
                cap: MAX_QUBITS,
            });
        }
        Ok(DensityMatrix { n, data })
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.data
    }

    pub fn trace(&self) -> Complex64 {
        self.data.trace()
    }

    pub fn hermiticity_error(&self) -> f64 {
        (&self.data - self.data.adjoint())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let herm = (&self.data + self.data.adjoint()) * Complex64::new(0.5, 0.0);
        SymmetricEigen::new(herm)
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    fn check_positions(&self, positions: &[usize], arity: usize) -> Result<()> {
        if positions.len() != arity {
            return Err(Error::ArityMismatch {
                expected: arity,
                got: positions.len(),
            });
        }
        for (i, &p) in positions.iter().enumerate() {
            if p >= self.n {
                return Err(Error::IndexOutOfRange {
                    index: p,
                    size: self.n,
                });
            }
            if positions[..i].contains(&p) {
                return Err(Error::validation(format!("position {p} listed twice")));
            }
        }
        Ok(())
    }

    /// `ρ ← U ρ U†` with `U` acting on `positions`.
    pub fn apply_unitary(&mut self, u: &CMatrix, positions: &[usize]) -> Result<()> {
        let k = positions.len();
        if u.nrows() != 1 << k || u.ncols() != 1 << k {
            return Err(Error::ArityMismatch {
                expected: u.nrows().trailing_zeros() as usize,
                got: k,
            });
        }
        self.check_positions(positions, k)?;
        check_local_arity(k)?;
        let (offs, mask) = offsets(positions, self.n);
        conjugate(&mut self.data, u, &offs, mask);
        Ok(())
    }

    /// Applies a diagonal unitary given by its diagonal on `positions`.
    pub fn apply_diagonal(&mut self, diag: &[Complex64], positions: &[usize]) -> Result<()> {
        let k = positions.len();
        if diag.len() != 1 << k {
            return Err(Error::ArityMismatch {
                expected: diag.len().trailing_zeros() as usize,
                got: k,
            });
        }
        self.check_positions(positions, k)?;
        let dim = 1 << self.n;
        let local: Vec<Complex64> = (0..dim)
            .map(|i| {
                let l = positions
                    .iter()
                    .fold(0, |acc, &p| acc << 1 | (i >> (self.n - 1 - p) & 1));
                diag[l]
            })
            .collect();
        let data = self.data.as_mut_slice();
        for (c, col) in data.chunks_exact_mut(dim).enumerate() {
            let dc = local[c].conj();
            for (x, d) in col.iter_mut().zip(&local) {
                *x *= d * dc;
            }
        }
        Ok(())
    }

    /// `ρ ← Σ K ρ K†` with the channel acting on `positions`.
    pub fn apply_channel(&mut self, channel: &QuantumChannel, positions: &[usize]) -> Result<()> {
        self.check_positions(positions, channel.arity())?;
        check_local_arity(channel.arity())?;
        let (offs, mask) = offsets(positions, self.n);
        match channel.kraus() {
            [] => {}
            [k] => conjugate(&mut self.data, k, &offs, mask),
            ops => apply_superop(&mut self.data, &superoperator(ops), &offs, mask),
        }
        Ok(())
    }

    /// Applies a gate whose qubit labels are register positions.
    pub fn apply_gate(&mut self, gate: &Gate) -> Result<()> {
        if gate.kind == GateKind::Barrier {
            return Ok(());
        }
        if gate.kind == GateKind::Cz {
            let minus = Complex64::new(-1.0, 0.0);
            let one = Complex64::new(1.0, 0.0);
            return self.apply_diagonal(&[one, one, one, minus], &gate.qubits);
        }
        let u = gate.unitary().expect("rotation has a unitary");
        self.apply_unitary(&u, &gate.qubits)
    }

    /// Marginal probabilities of `positions`, indexed with `positions[0]`
    /// as the most significant bit.
    pub fn probabilities(&self, positions: &[usize]) -> Result<Vec<f64>> {
        self.check_positions(positions, positions.len())?;
        let mut out = vec![0.0; 1 << positions.len()];
        for i in 0..1usize << self.n {
            let key = positions
                .iter()
                .fold(0, |acc, &p| acc << 1 | (i >> (self.n - 1 - p) & 1));
            out[key] += self.data[(i, i)].re;
        }
        Ok(out)
    }
}

/// Local operators act on at most two qubits.
fn check_local_arity(k: usize) -> Result<()> {
    if k > 2 {
        return Err(Error::validation(format!(
            "operators on {k} qubits are not supported, at most 2"
        )));
    }
    Ok(())
}

/// `m ← A m A†` for `A` embedded at the local offsets.
fn conjugate(m: &mut CMatrix, a: &CMatrix, offs: &[usize], mask: usize) {
    let dim = m.nrows();
    let k = offs.len();
    let a: Vec<Complex64> = (0..k * k).map(|i| a[(i / k, i % k)]).collect();
    let a_conj: Vec<Complex64> = a.iter().map(|z| z.conj()).collect();
    let data = m.as_mut_slice();
    let bases: Vec<usize> = (0..dim).filter(|b| b & mask == 0).collect();
    let mut buf = [Complex64::new(0.0, 0.0); 4];
    // Rows: m ← A m. Columns are contiguous.
    for col in data.chunks_exact_mut(dim) {
        for &b in &bases {
            for (slot, &o) in buf.iter_mut().zip(offs) {
                *slot = col[b + o];
            }
            for (l, &o) in offs.iter().enumerate() {
                let row = &a[l * k..(l + 1) * k];
                col[b + o] = row.iter().zip(&buf).map(|(x, v)| x * v).sum();
            }
        }
    }
    // Columns: m ← m A†.
    let mut cols = [0usize; 4];
    for &b in &bases {
        for (slot, &o) in cols.iter_mut().zip(offs) {
            *slot = (b + o) * dim;
        }
        for r in 0..dim {
            for (slot, &c) in buf.iter_mut().zip(&cols[..k]) {
                *slot = data[c + r];
            }
            for (l, &c) in cols[..k].iter().enumerate() {
                let row = &a_conj[l * k..(l + 1) * k];
                data[c + r] = row.iter().zip(&buf).map(|(x, v)| x * v).sum();
            }
        }
    }
}

/// Row-major `S[(l,m),(l',m')] = Σ K[l,l'] conj(K[m,m'])`, acting on a
/// local block `B[l,m]` flattened row-major.
fn superoperator(kraus: &[CMatrix]) -> Vec<Complex64> {
    let k = kraus[0].nrows();
    let k2 = k * k;
    let mut s = vec![Complex64::new(0.0, 0.0); k2 * k2];
    for op in kraus {
        for l in 0..k {
            for m in 0..k {
                for lp in 0..k {
                    for mp in 0..k {
                        s[(l * k + m) * k2 + lp * k + mp] += op[(l, lp)] * op[(m, mp)].conj();
                    }
                }
            }
        }
    }
    s
}

fn apply_superop(m: &mut CMatrix, s: &[Complex64], offs: &[usize], mask: usize) {
    let dim = m.nrows();
    let k = offs.len();
    let k2 = k * k;
    let data = m.as_mut_slice();
    let bases: Vec<usize> = (0..dim).filter(|b| b & mask == 0).collect();
    let mut idx = [0usize; 16];
    let mut blk = [Complex64::new(0.0, 0.0); 16];
    for &bc in &bases {
        for &br in &bases {
            for l in 0..k {
                for mm in 0..k {
                    let i = br + offs[l] + (bc + offs[mm]) * dim;
                    idx[l * k + mm] = i;
                    blk[l * k + mm] = data[i];
                }
            }
            for a in 0..k2 {
                let row = &s[a * k2..(a + 1) * k2];
                data[idx[a]] = row.iter().zip(&blk[..k2]).map(|(x, v)| x * v).sum();
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{deph2, gamp};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
        a.kronecker(b)
    }

    /// Full-register operator for `u` on the listed positions, built by
    /// permuting a Kronecker product.
    fn embed(u: &CMatrix, positions: &[usize], n: usize) -> CMatrix {
        let rest: Vec<usize> = (0..n).filter(|p| !positions.contains(p)).collect();
        let big = kron(u, &CMatrix::identity(1 << rest.len(), 1 << rest.len()));
        let order: Vec<usize> = positions.iter().chain(rest.iter()).copied().collect();
        let dim = 1 << n;
        let permute = |i: usize| -> usize {
            order
                .iter()
                .fold(0, |acc, &p| acc << 1 | (i >> (n - 1 - p) & 1))
        };
        CMatrix::from_fn(dim, dim, |r, c| big[(permute(r), permute(c))])
    }

    fn random_state(n: usize, seed: u64) -> DensityMatrix {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let dim = 1 << n;
        let a = CMatrix::from_fn(dim, dim, |_, _| {
            Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        let rho = &a * a.adjoint();
        let tr = rho.trace();
        DensityMatrix::from_matrix(rho / tr).unwrap()
    }

    #[test]
    fn embedded_unitary_matches_kronecker_oracle() {
        let n = 3;
        let rho = random_state(n, 7);
        let u = Gate::ry(0, 0.7).unitary().unwrap();
        let v = kron(&u, &Gate::rx(0, -1.1).unitary().unwrap());
        for positions in [vec![2, 0], vec![0, 1], vec![1, 2], vec![2, 1]] {
            let mut s = rho.clone();
            s.apply_unitary(&v, &positions).unwrap();
            let big = embed(&v, &positions, n);
            let expect = &big * rho.matrix() * big.adjoint();
            let err = (s.matrix() - expect).iter().map(|z| z.norm()).fold(0.0, f64::max);
            assert!(err < 1e-14, "{positions:?}: {err}");
        }
    }

    #[test]
    fn diagonal_matches_dense() {
        let rho = random_state(3, 11);
        let d = crate::channels::crosstalk_phases(1.0e6, 0.4e-6);
        let mut a = rho.clone();
        a.apply_diagonal(&d, &[2, 0]).unwrap();
        let mut b = rho.clone();
        b.apply_unitary(&CMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(&d)), &[2, 0])
            .unwrap();
        let err = (a.matrix() - b.matrix()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(err < 1e-15);
    }

    #[test]
    fn channel_matches_kraus_sum_oracle() {
        let rho = random_state(3, 5);
        let ch = deph2(0.3).unwrap();
        let mut s = rho.clone();
        s.apply_channel(&ch, &[1, 2]).unwrap();
        let mut expect = CMatrix::zeros(8, 8);
        for k in ch.kraus() {
            let big = embed(k, &[1, 2], 3);
            expect += &big * rho.matrix() * big.adjoint();
        }
        let err = (s.matrix() - expect).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(err < 1e-14);
    }

    #[test]
    fn bell_state_probabilities() {
        let mut s = DensityMatrix::zero_state(2).unwrap();
        s.apply_gate(&Gate::ry(0, std::f64::consts::FRAC_PI_2)).unwrap();
        s.apply_gate(&Gate::ry(1, std::f64::consts::FRAC_PI_2)).unwrap();
        s.apply_gate(&Gate::cz(0, 1)).unwrap();
        s.apply_gate(&Gate::ry(1, -std::f64::consts::FRAC_PI_2)).unwrap();
        let p = s.probabilities(&[0, 1]).unwrap();
        assert_abs_diff_eq!(p[0], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(p[3], 0.5, epsilon = 1e-15);
        let swapped = s.probabilities(&[1]).unwrap();
        assert_abs_diff_eq!(swapped[0], 0.5, epsilon = 1e-15);
    }

    #[test]
    fn position_zero_is_most_significant() {
        let mut s = DensityMatrix::zero_state(3).unwrap();
        s.apply_gate(&Gate::rx(0, std::f64::consts::PI)).unwrap();
        assert_abs_diff_eq!(s.matrix()[(4, 4)].re, 1.0, epsilon = 1e-15);
        let p = s.probabilities(&[2, 0]).unwrap();
        assert_abs_diff_eq!(p[0b01], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn errors() {
        assert!(matches!(
            DensityMatrix::zero_state(7),
            Err(Error::Capacity { needed: 7, cap: 6 })
        ));
        let mut s = DensityMatrix::zero_state(2).unwrap();
        let ch = gamp(0.1, 0.0).unwrap();
        assert!(matches!(
            s.apply_channel(&ch, &[0, 1]),
            Err(Error::ArityMismatch { .. })
        ));
        assert!(matches!(
            s.apply_channel(&ch, &[2]),
            Err(Error::IndexOutOfRange { index: 2, size: 2 })
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn channels_keep_states_physical(
            seed in 0u64..1000,
            gamma in 0.0f64..=1.0,
            p in 0.0f64..=0.5,
            delta in 0.0f64..=0.75,
            a in 0usize..3,
            b in 0usize..3,
        ) {
            prop_assume!(a != b);
            let mut s = random_state(3, seed);
            s.apply_channel(&gamp(gamma, p).unwrap(), &[a]).unwrap();
            s.apply_channel(&deph2(delta).unwrap(), &[a, b]).unwrap();
            s.apply_gate(&Gate::cz(b, a)).unwrap();
            prop_assert!((s.trace().re - 1.0).abs() < 1e-12);
            prop_assert!(s.trace().im.abs() < 1e-12);
            prop_assert!(s.hermiticity_error() < 1e-12);
            prop_assert!(s.min_eigenvalue() > -1e-12);
        }
    }
}

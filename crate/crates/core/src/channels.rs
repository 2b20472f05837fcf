//! CPTP maps of the noise model as explicit Kraus sets, the ZZ crosstalk
//! unitary, and the classical readout confusion map.

use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

/// Absolute tolerance used when checking Kraus completeness.
pub const COMPLETENESS_TOL: f64 = 1e-12;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn mat2(a: f64, b: f64, c: f64, d: f64) -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[re(a), re(b), re(c), re(d)])
}

pub fn pauli_z() -> CMatrix {
    mat2(1.0, 0.0, 0.0, -1.0)
}

/// A completely positive trace-preserving map on one or two qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumChannel {
    arity: usize,
    kraus: Vec<CMatrix>,
    label: String,
}

impl QuantumChannel {
    /// Builds a channel and checks `sum K^dag K = I` to [`COMPLETENESS_TOL`].
    /// Kraus operators that are identically zero are dropped.
    pub fn new(arity: usize, kraus: Vec<CMatrix>, label: impl Into<String>) -> Result<Self> {
        let label = label.into();
        let dim = 1usize << arity;
        if kraus.is_empty() {
            return Err(Error::validation(format!("{label}: empty Kraus set")));
        }
        if let Some(k) = kraus.iter().find(|k| k.nrows() != dim || k.ncols() != dim) {
            return Err(Error::validation(format!(
                "{label}: Kraus operator is {}x{}, expected {dim}x{dim}",
                k.nrows(),
                k.ncols()
            )));
        }
        let kraus: Vec<CMatrix> = kraus
            .into_iter()
            .filter(|k| k.iter().any(|z| *z != ZERO))
            .collect();
        let channel = QuantumChannel {
            arity,
            kraus,
            label,
        };
        let err = channel.completeness_error();
        if !(err <= COMPLETENESS_TOL) {
            return Err(Error::validation(format!(
                "{}: Kraus set is not trace preserving (deviation {err:e})",
                channel.label
            )));
        }
        Ok(channel)
    }

    pub fn identity(arity: usize) -> Self {
        QuantumChannel {
            arity,
            kraus: vec![CMatrix::identity(1 << arity, 1 << arity)],
            label: "id".into(),
        }
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn kraus(&self) -> &[CMatrix] {
        &self.kraus
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Largest elementwise deviation of `sum K^dag K` from the identity.
    pub fn completeness_error(&self) -> f64 {
        let dim = 1usize << self.arity;
        let mut acc = CMatrix::zeros(dim, dim);
        for k in &self.kraus {
            acc += k.adjoint() * k;
        }
        acc -= CMatrix::identity(dim, dim);
        acc.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `next ∘ self`: apply `self` first, then `next`. Materialized as the
    /// product Kraus set `{B_j A_i}`.
    pub fn then(&self, next: &QuantumChannel, label: impl Into<String>) -> Result<Self> {
        if self.arity != next.arity {
            return Err(Error::ArityMismatch {
                expected: self.arity,
                got: next.arity,
            });
        }
        let mut kraus = Vec::with_capacity(self.kraus.len() * next.kraus.len());
        for b in &next.kraus {
            for a in &self.kraus {
                kraus.push(b * a);
            }
        }
        QuantumChannel::new(self.arity, kraus, label)
    }

    /// Applies the channel to a density matrix of matching dimension.
    pub fn apply_to(&self, rho: &CMatrix) -> CMatrix {
        let mut out = CMatrix::zeros(rho.nrows(), rho.ncols());
        for k in &self.kraus {
            out += k * rho * k.adjoint();
        }
        out
    }
}

impl fmt::Display for QuantumChannel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label)
    }
}

fn check_range(what: &str, value: f64, lo: f64, hi: f64) -> Result<()> {
    if (lo..=hi).contains(&value) {
        Ok(())
    } else {
        Err(Error::validation(format!("{what} = {value} outside [{lo}, {hi}]")))
    }
}

/// Generalized amplitude damping toward the thermal state
/// `(1-p)|0><0| + p|1><1|` with damping strength `gamma`.
pub fn gamp(gamma: f64, p_excited: f64) -> Result<QuantumChannel> {
    check_range("gamp gamma", gamma, 0.0, 1.0)?;
    check_range("gamp p_excited", p_excited, 0.0, 1.0)?;
    let g = gamma.sqrt();
    let keep = (1.0 - gamma).sqrt();
    let a = (1.0 - p_excited).sqrt();
    let b = p_excited.sqrt();
    QuantumChannel::new(
        1,
        vec![
            mat2(a, 0.0, 0.0, a * keep),
            mat2(0.0, a * g, 0.0, 0.0),
            mat2(b * keep, 0.0, 0.0, b),
            mat2(0.0, 0.0, b * g, 0.0),
        ],
        format!("gamp({gamma:.6}, p1={p_excited:.6})"),
    )
}

/// Phase flip: `(1-delta) rho + delta Z rho Z`.
pub fn deph(delta: f64) -> Result<QuantumChannel> {
    check_range("deph delta", delta, 0.0, 0.5)?;
    QuantumChannel::new(
        1,
        vec![
            CMatrix::identity(2, 2) * re((1.0 - delta).sqrt()),
            pauli_z() * re(delta.sqrt()),
        ],
        format!("deph({delta:.6})"),
    )
}

/// Two-qubit dephasing with equal weight on `Z⊗I`, `I⊗Z` and `Z⊗Z`.
pub fn deph2(delta2: f64) -> Result<QuantumChannel> {
    check_range("deph2 delta", delta2, 0.0, 0.75)?;
    let z = pauli_z();
    let id = CMatrix::identity(2, 2);
    let w = re((delta2 / 3.0).sqrt());
    QuantumChannel::new(
        2,
        vec![
            CMatrix::identity(4, 4) * re((1.0 - delta2).sqrt()),
            z.kronecker(&id) * w,
            id.kronecker(&z) * w,
            z.kronecker(&z) * w,
        ],
        format!("deph2({delta2:.6})"),
    )
}

/// Idle relaxation for `dt` seconds: amplitude damping with
/// `gamma = 1 - exp(-dt/T1)` followed by dephasing with
/// `delta = (1 - exp(-dt/T2)) / 2`.
pub fn decay_channel(t1: f64, t2: f64, p_excited: f64, dt: f64) -> Result<QuantumChannel> {
    if !(dt >= 0.0) {
        return Err(Error::validation(format!("decay duration {dt} is negative")));
    }
    if !(t1 > 0.0 && t2 > 0.0) {
        return Err(Error::validation("decay: t1 and t2 must be positive"));
    }
    let gamma = -(-dt / t1).exp_m1();
    let delta = -0.5 * (-dt / t2).exp_m1();
    let damping = gamp(gamma, p_excited)?;
    let dephasing = deph(delta)?;
    damping.then(&dephasing, format!("decay({:.3}ns)", dt * 1e9))
}

/// `exp(-i beta d Z⊗Z)` as its diagonal, basis order `00, 01, 10, 11`.
pub fn crosstalk_phases(beta: f64, duration: f64) -> [Complex64; 4] {
    let phi = beta * duration;
    let minus = Complex64::from_polar(1.0, -phi);
    let plus = Complex64::from_polar(1.0, phi);
    [minus, plus, plus, minus]
}

pub fn crosstalk_unitary(beta: f64, duration: f64) -> CMatrix {
    let d = crosstalk_phases(beta, duration);
    CMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&d))
}

/// `delta1 = 3/2 (1 - F)` for `F` in `[2/3, 1]`.
pub fn delta1_from_fidelity(fidelity: f64) -> Result<f64> {
    check_range("single-qubit fidelity", fidelity, 2.0 / 3.0, 1.0)?;
    Ok((1.5 * (1.0 - fidelity)).clamp(0.0, 0.5))
}

/// `delta2 = 5/4 (1 - F2)` for `F2` in `[0.4, 1]`.
pub fn delta2_from_fidelity(fidelity: f64) -> Result<f64> {
    check_range("cz fidelity", fidelity, 0.4, 1.0)?;
    Ok((1.25 * (1.0 - fidelity)).clamp(0.0, 0.75))
}

/// Readout confusion matrix; entry `(k, l)` is the probability of reading
/// `k` when `l` was prepared. Columns are stochastic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConfusionMatrix {
    m: [[f64; 2]; 2],
}

impl ConfusionMatrix {
    pub fn new(p0_given_0: f64, p0_given_1: f64, p1_given_0: f64, p1_given_1: f64) -> Self {
        ConfusionMatrix {
            m: [[p0_given_0, p0_given_1], [p1_given_0, p1_given_1]],
        }
    }

    pub fn identity() -> Self {
        Self::new(1.0, 0.0, 0.0, 1.0)
    }

    /// Symmetric bit-flip readout error.
    pub fn symmetric(flip: f64) -> Self {
        Self::new(1.0 - flip, flip, flip, 1.0 - flip)
    }

    /// `P(observed | prepared)`.
    pub fn p(&self, observed: usize, prepared: usize) -> f64 {
        self.m[observed][prepared]
    }

    pub fn validate(&self) -> Result<()> {
        for row in &self.m {
            for &x in row {
                if !(0.0..=1.0).contains(&x) {
                    return Err(Error::validation(format!(
                        "confusion entry {x} outside [0, 1]"
                    )));
                }
            }
        }
        for l in 0..2 {
            let sum = self.m[0][l] + self.m[1][l];
            if (sum - 1.0).abs() > 1e-9 {
                return Err(Error::validation(format!(
                    "confusion column for prepared |{l}> sums to {sum}, not 1"
                )));
            }
        }
        Ok(())
    }

    pub fn is_identity(&self) -> bool {
        *self == Self::identity()
    }

    /// Applies the map to bit `position` (0 = most significant) of a
    /// probability vector over `width` bits.
    pub fn apply(&self, probs: &mut [f64], position: usize, width: usize) {
        debug_assert_eq!(probs.len(), 1 << width);
        let mask = 1usize << (width - 1 - position);
        for i in 0..probs.len() {
            if i & mask != 0 {
                continue;
            }
            let (p0, p1) = (probs[i], probs[i | mask]);
            probs[i] = self.m[0][0] * p0 + self.m[0][1] * p1;
            probs[i | mask] = self.m[1][0] * p0 + self.m[1][1] * p1;
        }
    }
}

//! GHZ and W state preparation benchmarks over star-connected subsets.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;

use crate::circuit::{Circuit, Gate};
use crate::device::{DeviceModel, Edge};
use crate::distribution::ShotDistribution;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Family {
    Ghz,
    W,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Ghz => "ghz",
            Family::W => "w",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BenchmarkSpec {
    pub family: Family,
    /// Ascending qubit labels.
    pub qubits: Vec<usize>,
    pub label: String,
    /// Whether the circuit may be used to fit the model.
    pub trainable: bool,
}

impl BenchmarkSpec {
    pub fn new(family: Family, qubits: &[usize]) -> Self {
        let mut qubits = qubits.to_vec();
        qubits.sort_unstable();
        let label = format!(
            "{family}_{}",
            qubits
                .iter()
                .map(|q| q.to_string())
                .collect::<Vec<_>>()
                .join("-")
        );
        BenchmarkSpec {
            family,
            trainable: qubits.len() <= 3,
            qubits,
            label,
        }
    }

    pub fn circuit(&self, device: &DeviceModel) -> Result<Circuit> {
        match self.family {
            Family::Ghz => ghz_circuit(self, device),
            Family::W => w_circuit(self, device),
        }
    }

    /// Noise-free outcome distribution over `self.qubits`.
    pub fn ideal_distribution(&self) -> ShotDistribution {
        let n = self.qubits.len();
        let probs: BTreeMap<String, f64> = match self.family {
            Family::Ghz => ["0".repeat(n), "1".repeat(n)]
                .into_iter()
                .map(|k| (k, 0.5))
                .collect(),
            Family::W => (0..n)
                .map(|i| {
                    let k: String = (0..n).map(|j| if i == j { '1' } else { '0' }).collect();
                    (k, 1.0 / n as f64)
                })
                .collect(),
        };
        ShotDistribution::exact(n, probs).expect("analytic targets are normalized")
    }

    fn unrealizable(&self, reason: impl Into<String>) -> Error {
        Error::Unrealizable {
            label: self.label.clone(),
            reason: reason.into(),
        }
    }

    /// Checks the subset and returns the root qubit, which is coupled to
    /// every other qubit of the subset.
    fn root(&self, device: &DeviceModel) -> Result<usize> {
        if self.qubits.len() < 2 {
            return Err(self.unrealizable("needs at least two qubits"));
        }
        let unique: BTreeSet<_> = self.qubits.iter().collect();
        if unique.len() != self.qubits.len() {
            return Err(self.unrealizable("repeated qubit"));
        }
        if let Some(q) = self.qubits.iter().find(|&&q| !device.is_active(q)) {
            return Err(self.unrealizable(format!("q{q} is not active")));
        }
        self.qubits
            .iter()
            .copied()
            .filter(|&r| {
                self.qubits
                    .iter()
                    .all(|&q| q == r || device.coupling(Edge::new(r, q)).is_some())
            })
            .max_by_key(|&r| (device.neighbors(r).len(), std::cmp::Reverse(r)))
            .ok_or_else(|| self.unrealizable("no qubit is coupled to all the others"))
    }
}

fn empty_circuit(spec: &BenchmarkSpec, device: &DeviceModel) -> Circuit {
    Circuit::new(spec.label.clone(), device.num_qubits())
}

/// Root in `|+⟩`, then a CNOT fan-out to every leaf built from CZ and
/// `ry(∓π/2)` basis changes.
pub fn ghz_circuit(spec: &BenchmarkSpec, device: &DeviceModel) -> Result<Circuit> {
    let root = spec.root(device)?;
    let mut c = empty_circuit(spec, device);
    c.push(Gate::rz(root, PI))?;
    c.push(Gate::ry(root, FRAC_PI_2))?;
    for &leaf in spec.qubits.iter().filter(|&&q| q != root) {
        c.push(Gate::ry(leaf, -FRAC_PI_2))?;
        c.push(Gate::cz(root, leaf))?;
        c.push(Gate::ry(leaf, FRAC_PI_2))?;
    }
    c.measure(&spec.qubits)?;
    Ok(c)
}

/// Excitation on the root, then one leaf at a time takes its share of the
/// amplitude with a controlled rotation and hands the excitation back
/// with a CNOT.
pub fn w_circuit(spec: &BenchmarkSpec, device: &DeviceModel) -> Result<Circuit> {
    let root = spec.root(device)?;
    let n = spec.qubits.len();
    let mut c = empty_circuit(spec, device);
    c.push(Gate::rx(root, PI))?;
    for (k, &leaf) in spec.qubits.iter().filter(|&&q| q != root).enumerate() {
        let remaining = (n - k) as f64;
        let phi = 2.0 * (1.0 / remaining.sqrt()).asin();
        // Controlled ry(phi) on a leaf that starts in |0>.
        c.push(Gate::ry(leaf, -phi / 2.0))?;
        c.push(Gate::cz(root, leaf))?;
        c.push(Gate::ry(leaf, phi / 2.0))?;
        // CNOT leaf -> root.
        c.push(Gate::ry(root, -FRAC_PI_2))?;
        c.push(Gate::cz(root, leaf))?;
        c.push(Gate::ry(root, FRAC_PI_2))?;
    }
    c.measure(&spec.qubits)?;
    Ok(c)
}

/// Eight benchmarks: GHZ and W on the three 3-qubit subsets through the
/// star center (trainable) and on the 4-qubit subset (test only).
pub fn benchmark_suite(device: &DeviceModel) -> Result<Vec<BenchmarkSpec>> {
    let active: BTreeSet<usize> = device.active_qubits.iter().copied().collect();
    let active_neighbors =
        |q: usize| -> Vec<usize> { device.neighbors(q).intersection(&active).copied().collect() };
    let center = active
        .iter()
        .copied()
        .max_by_key(|&q| (active_neighbors(q).len(), std::cmp::Reverse(q)))
        .ok_or_else(|| Error::validation("device has no active qubits"))?;
    let leaves: Vec<usize> = active_neighbors(center).into_iter().take(3).collect();
    if leaves.len() < 3 {
        return Err(Error::validation(format!(
            "benchmark suite needs a center with three active neighbours, q{center} has {}",
            leaves.len()
        )));
    }
    let mut subsets: Vec<Vec<usize>> = Vec::new();
    for i in 0..3 {
        for j in i + 1..3 {
            let mut s = vec![center, leaves[i], leaves[j]];
            s.sort_unstable();
            subsets.push(s);
        }
    }
    subsets.sort();
    let mut four = vec![center, leaves[0], leaves[1], leaves[2]];
    four.sort_unstable();
    subsets.push(four);

    Ok(subsets
        .iter()
        .flat_map(|s| [BenchmarkSpec::new(Family::Ghz, s), BenchmarkSpec::new(Family::W, s)])
        .collect())
}

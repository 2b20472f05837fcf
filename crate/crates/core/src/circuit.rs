//! Gate-level circuits over device qubit labels, and the line-oriented
//! circuit text format.
//!
//! ```text
//! # GHZ on three qubits
//! rz q2 pi
//! ry q2 pi/2
//! ry q0 -pi/2
//! cz q2 q0
//! ry q0 pi/2
//! barrier
//! measure q0 q2
//! ```

use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;

use crate::channels::CMatrix;
use crate::device::DurationKind;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GateKind {
    Rx(f64),
    Ry(f64),
    /// Virtual Z rotation: zero duration, no error.
    Rz(f64),
    Cz,
    /// Scheduling fence with zero duration. An empty qubit list fences
    /// every wire of the circuit.
    Barrier,
}

impl GateKind {
    pub fn name(&self) -> &'static str {
        match self {
            GateKind::Rx(_) => "rx",
            GateKind::Ry(_) => "ry",
            GateKind::Rz(_) => "rz",
            GateKind::Cz => "cz",
            GateKind::Barrier => "barrier",
        }
    }

    pub fn angle(&self) -> Option<f64> {
        match *self {
            GateKind::Rx(t) | GateKind::Ry(t) | GateKind::Rz(t) => Some(t),
            _ => None,
        }
    }

    /// Gates that occupy time on hardware.
    pub fn is_timed(&self) -> bool {
        matches!(self, GateKind::Rx(_) | GateKind::Ry(_) | GateKind::Cz)
    }

    pub fn duration_kind(&self) -> Option<DurationKind> {
        match self {
            GateKind::Rx(_) => Some(DurationKind::Rx),
            GateKind::Ry(_) => Some(DurationKind::Ry),
            GateKind::Rz(_) => Some(DurationKind::Rz),
            GateKind::Cz => Some(DurationKind::Cz),
            GateKind::Barrier => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gate {
    pub kind: GateKind,
    pub qubits: Vec<usize>,
}

impl Gate {
    pub fn rx(q: usize, theta: f64) -> Self {
        Gate {
            kind: GateKind::Rx(theta),
            qubits: vec![q],
        }
    }

    pub fn ry(q: usize, theta: f64) -> Self {
        Gate {
            kind: GateKind::Ry(theta),
            qubits: vec![q],
        }
    }

    pub fn rz(q: usize, theta: f64) -> Self {
        Gate {
            kind: GateKind::Rz(theta),
            qubits: vec![q],
        }
    }

    pub fn cz(a: usize, b: usize) -> Self {
        Gate {
            kind: GateKind::Cz,
            qubits: vec![a, b],
        }
    }

    pub fn barrier(qubits: &[usize]) -> Self {
        Gate {
            kind: GateKind::Barrier,
            qubits: qubits.to_vec(),
        }
    }

    /// Unitary in the basis of `self.qubits` (first qubit most significant).
    /// `None` for barriers.
    pub fn unitary(&self) -> Option<CMatrix> {
        let c = |re: f64, im: f64| Complex64::new(re, im);
        match self.kind {
            GateKind::Rx(t) => {
                let (s, co) = (t / 2.0).sin_cos();
                Some(CMatrix::from_row_slice(
                    2,
                    2,
                    &[c(co, 0.0), c(0.0, -s), c(0.0, -s), c(co, 0.0)],
                ))
            }
            GateKind::Ry(t) => {
                let (s, co) = (t / 2.0).sin_cos();
                Some(CMatrix::from_row_slice(
                    2,
                    2,
                    &[c(co, 0.0), c(-s, 0.0), c(s, 0.0), c(co, 0.0)],
                ))
            }
            GateKind::Rz(t) => Some(CMatrix::from_row_slice(
                2,
                2,
                &[
                    Complex64::from_polar(1.0, -t / 2.0),
                    c(0.0, 0.0),
                    c(0.0, 0.0),
                    Complex64::from_polar(1.0, t / 2.0),
                ],
            )),
            GateKind::Cz => {
                let mut m = CMatrix::identity(4, 4);
                m[(3, 3)] = c(-1.0, 0.0);
                Some(m)
            }
            GateKind::Barrier => None,
        }
    }

    fn validate(&self, num_qubits: usize) -> Result<()> {
        for &q in &self.qubits {
            if q >= num_qubits {
                return Err(Error::validation(format!(
                    "{} acts on q{q} but the circuit has {num_qubits} qubits",
                    self.kind.name()
                )));
            }
        }
        match self.kind {
            GateKind::Rx(t) | GateKind::Ry(t) | GateKind::Rz(t) => {
                if self.qubits.len() != 1 {
                    return Err(Error::validation(format!(
                        "{} takes exactly one qubit",
                        self.kind.name()
                    )));
                }
                if !t.is_finite() {
                    return Err(Error::validation(format!(
                        "{} angle must be finite",
                        self.kind.name()
                    )));
                }
            }
            GateKind::Cz => {
                if self.qubits.len() != 2 || self.qubits[0] == self.qubits[1] {
                    return Err(Error::validation("cz takes two distinct qubits"));
                }
            }
            GateKind::Barrier => {
                let unique: BTreeSet<_> = self.qubits.iter().collect();
                if unique.len() != self.qubits.len() {
                    return Err(Error::validation("barrier lists a qubit twice"));
                }
            }
        }
        Ok(())
    }
}

/// Ordered gate list with a terminal measurement of a subset of qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    pub name: String,
    num_qubits: usize,
    gates: Vec<Gate>,
    measured: BTreeSet<usize>,
}

impl Circuit {
    pub fn new(name: impl Into<String>, num_qubits: usize) -> Self {
        Circuit {
            name: name.into(),
            num_qubits,
            gates: Vec::new(),
            measured: BTreeSet::new(),
        }
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    /// Measured qubits, ascending. Bitstrings put the lowest label leftmost.
    pub fn measured(&self) -> Vec<usize> {
        self.measured.iter().copied().collect()
    }

    pub fn push(&mut self, gate: Gate) -> Result<&mut Self> {
        gate.validate(self.num_qubits)?;
        if let Some(q) = gate.qubits.iter().find(|q| self.measured.contains(q)) {
            if gate.kind != GateKind::Barrier {
                return Err(Error::validation(format!(
                    "q{q} is used after its measurement"
                )));
            }
        }
        self.gates.push(gate);
        Ok(self)
    }

    pub fn measure(&mut self, qubits: &[usize]) -> Result<&mut Self> {
        for &q in qubits {
            if q >= self.num_qubits {
                return Err(Error::validation(format!(
                    "measure q{q} but the circuit has {} qubits",
                    self.num_qubits
                )));
            }
            if !self.measured.insert(q) {
                return Err(Error::validation(format!("q{q} is measured twice")));
            }
        }
        Ok(self)
    }

    /// Qubits touched by a non-barrier gate or a measurement.
    pub fn used_qubits(&self) -> BTreeSet<usize> {
        self.gates
            .iter()
            .filter(|g| g.kind != GateKind::Barrier)
            .flat_map(|g| g.qubits.iter().copied())
            .chain(self.measured.iter().copied())
            .collect()
    }

    /// Length of the longest chain of non-barrier gates, counted wire by
    /// wire with multi-qubit gates synchronizing their wires.
    pub fn depth(&self) -> usize {
        let mut level = vec![0usize; self.num_qubits];
        for g in &self.gates {
            let wires: Vec<usize> = if g.kind == GateKind::Barrier && g.qubits.is_empty() {
                (0..self.num_qubits).collect()
            } else {
                g.qubits.clone()
            };
            let step = usize::from(g.kind != GateKind::Barrier);
            let top = wires.iter().map(|&q| level[q]).max().unwrap_or(0) + step;
            for q in wires {
                level[q] = top;
            }
        }
        level.into_iter().max().unwrap_or(0)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        Self::parse(&text, &name)
    }

    /// Parses the circuit text format. Without a `qubits N` header the
    /// register size is one more than the largest label used.
    pub fn parse(text: &str, name: &str) -> Result<Self> {
        let mut declared = None;
        let mut ops: Vec<(usize, Vec<&str>)> = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let words: Vec<&str> = line.split_whitespace().collect();
            if words[0] == "qubits" {
                let n = words
                    .get(1)
                    .and_then(|w| w.parse::<usize>().ok())
                    .filter(|_| words.len() == 2)
                    .ok_or_else(|| {
                        Error::parse(format!("{name}:{}", lineno + 1), "expected `qubits N`")
                    })?;
                declared = Some(n);
            } else {
                ops.push((lineno + 1, words));
            }
        }

        let mut parsed = Vec::with_capacity(ops.len());
        let mut max_label = None::<usize>;
        for (lineno, words) in &ops {
            let at = || format!("{name}:{lineno}");
            let qubit = |w: &str| -> Result<usize> {
                w.strip_prefix('q')
                    .and_then(|n| n.parse().ok())
                    .ok_or_else(|| Error::parse(at(), format!("`{w}` is not a qubit like q0")))
            };
            let op = match words[0] {
                "rx" | "ry" | "rz" => {
                    if words.len() != 3 {
                        return Err(Error::parse(at(), format!("{} takes a qubit and an angle", words[0])));
                    }
                    let q = qubit(words[1])?;
                    let theta = parse_angle(words[2]).ok_or_else(|| {
                        Error::parse(at(), format!("`{}` is not an angle", words[2]))
                    })?;
                    let g = match words[0] {
                        "rx" => Gate::rx(q, theta),
                        "ry" => Gate::ry(q, theta),
                        _ => Gate::rz(q, theta),
                    };
                    Op::Gate(g)
                }
                "cz" => {
                    if words.len() != 3 {
                        return Err(Error::parse(at(), "cz takes two qubits"));
                    }
                    Op::Gate(Gate::cz(qubit(words[1])?, qubit(words[2])?))
                }
                "barrier" => Op::Gate(Gate::barrier(
                    &words[1..].iter().map(|w| qubit(w)).collect::<Result<Vec<_>>>()?,
                )),
                "measure" => {
                    if words.len() < 2 {
                        return Err(Error::parse(at(), "measure needs at least one qubit"));
                    }
                    Op::Measure(words[1..].iter().map(|w| qubit(w)).collect::<Result<Vec<_>>>()?)
                }
                other => return Err(Error::parse(at(), format!("unknown instruction `{other}`"))),
            };
            let labels: Vec<usize> = match &op {
                Op::Gate(g) => g.qubits.clone(),
                Op::Measure(qs) => qs.clone(),
            };
            for q in labels {
                max_label = Some(max_label.map_or(q, |m| m.max(q)));
            }
            parsed.push((*lineno, op));
        }

        let num_qubits = declared.unwrap_or_else(|| max_label.map_or(0, |m| m + 1));
        let mut circuit = Circuit::new(name, num_qubits);
        for (lineno, op) in parsed {
            let res = match op {
                Op::Gate(g) => circuit.push(g).map(|_| ()),
                Op::Measure(qs) => circuit.measure(&qs).map(|_| ()),
            };
            res.map_err(|e| Error::parse(format!("{name}:{lineno}"), e.to_string()))?;
        }
        Ok(circuit)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        if !self.name.is_empty() {
            let _ = writeln!(out, "# {}", self.name);
        }
        let _ = writeln!(out, "qubits {}", self.num_qubits);
        for g in &self.gates {
            out.push_str(g.kind.name());
            for q in &g.qubits {
                let _ = write!(out, " q{q}");
            }
            if let Some(t) = g.kind.angle() {
                let _ = write!(out, " {t:?}");
            }
            out.push('\n');
        }
        if !self.measured.is_empty() {
            out.push_str("measure");
            for q in &self.measured {
                let _ = write!(out, " q{q}");
            }
            out.push('\n');
        }
        out
    }
}

enum Op {
    Gate(Gate),
    Measure(Vec<usize>),
}

/// Accepts a float or `[-][k*]pi[/m]`.
fn parse_angle(s: &str) -> Option<f64> {
    if let Ok(x) = s.parse::<f64>() {
        return x.is_finite().then_some(x);
    }
    let (sign, body) = match s.strip_prefix('-') {
        Some(rest) => (-1.0, rest),
        None => (1.0, s),
    };
    let (num, den) = match body.split_once('/') {
        Some((n, d)) => (n, d.parse::<f64>().ok()?),
        None => (body, 1.0),
    };
    let factor = match num.strip_suffix("pi")? {
        "" => 1.0,
        k => k.strip_suffix('*')?.parse::<f64>().ok()?,
    };
    (den != 0.0).then(|| sign * factor * PI / den)
}

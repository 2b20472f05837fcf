//! Calibration snapshot of a fixed-coupling transmon device.
//!
//! A [`DeviceModel`] carries everything the noise model consumes: per-qubit
//! frequencies, anharmonicities, coherence times, state-preparation and
//! readout errors, single-qubit gate fidelities, the coupling graph with
//! per-pair coupling strengths and CZ fidelities, and the native gate
//! durations.
//!
//! On disk the calibration is a TOML file in presentation units (GHz, MHz,
//! kHz, ns). Everything is converted to SI (Hz, s) on load and back on save.
//! See `docs/formats.md` for the schema.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::PI;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::channels::ConfusionMatrix;
use crate::error::{Error, Result};

const GHZ: f64 = 1e9;
const MHZ: f64 = 1e6;
const KHZ: f64 = 1e3;
const NS: f64 = 1e-9;

/// Source of the bundled five-qubit star device.
pub const SOPRANO_D_TOML: &str = include_str!("../devices/soprano_d.toml");

/// Undirected coupling edge, stored with its endpoints in label order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Edge {
    lo: usize,
    hi: usize,
}

impl Edge {
    pub fn new(a: usize, b: usize) -> Self {
        Edge {
            lo: a.min(b),
            hi: a.max(b),
        }
    }

    pub fn lo(&self) -> usize {
        self.lo
    }

    pub fn hi(&self) -> usize {
        self.hi
    }

    pub fn contains(&self, q: usize) -> bool {
        self.lo == q || self.hi == q
    }
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.lo, self.hi)
    }
}

impl std::str::FromStr for Edge {
    type Err = Error;

    /// Accepts `a-b` or `a_b`.
    fn from_str(s: &str) -> Result<Self> {
        let mut parts = s.split(['-', '_']);
        let (Some(a), Some(b), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(Error::parse(s, "expected an edge of the form `a-b`"));
        };
        let a: usize = a
            .trim()
            .parse()
            .map_err(|_| Error::parse(s, "edge endpoint is not an integer"))?;
        let b: usize = b
            .trim()
            .parse()
            .map_err(|_| Error::parse(s, "edge endpoint is not an integer"))?;
        if a == b {
            return Err(Error::validation(format!("edge {s} is a self-loop")));
        }
        Ok(Edge::new(a, b))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QubitCalibration {
    pub index: usize,
    /// Hz
    pub frequency: f64,
    /// Hz
    pub anharmonicity: f64,
    /// s
    pub t1: f64,
    /// s
    pub t2: f64,
    /// Residual excited population after reset.
    pub p_excited: f64,
    pub confusion: ConfusionMatrix,
    /// Average single-qubit gate fidelity from randomized benchmarking.
    pub single_qubit_fidelity: f64,
}

/// Calibration of one coupler. `high` is the endpoint with the higher qubit
/// frequency, so the detuning `f_high - f_low` is positive.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingCalibration {
    pub high: usize,
    pub low: usize,
    /// Quasi-coupling strength J, Hz.
    pub coupling_j: f64,
    pub cz_fidelity: Option<f64>,
}

impl CouplingCalibration {
    pub fn edge(&self) -> Edge {
        Edge::new(self.high, self.low)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DurationKind {
    Rx,
    Ry,
    Rz,
    Cz,
    Measure,
}

impl DurationKind {
    pub const ALL: [DurationKind; 5] = [
        DurationKind::Rx,
        DurationKind::Ry,
        DurationKind::Rz,
        DurationKind::Cz,
        DurationKind::Measure,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DurationKind::Rx => "rx",
            DurationKind::Ry => "ry",
            DurationKind::Rz => "rz",
            DurationKind::Cz => "cz",
            DurationKind::Measure => "measure",
        }
    }

    fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == name)
    }
}

/// Immutable calibration snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct DeviceModel {
    pub name: String,
    pub qubits: Vec<QubitCalibration>,
    pub couplings: Vec<CouplingCalibration>,
    /// Gate durations in seconds.
    pub durations: BTreeMap<DurationKind, f64>,
    /// Qubits available to circuits, ascending.
    pub active_qubits: Vec<usize>,
}

/// Always-on ZZ rate as an angular frequency (rad/s).
///
/// `beta = 2*pi * J^2 * (1/(delta - alpha_u) - 1/(delta - alpha_v))` with
/// `delta = f_u - f_v`; all inputs in Hz. Returns `None` at a pole.
pub fn zz_rate(j: f64, f_u: f64, f_v: f64, alpha_u: f64, alpha_v: f64) -> Option<f64> {
    let delta = f_u - f_v;
    let scale = delta.abs().max(alpha_u.abs()).max(alpha_v.abs()).max(1.0);
    let du = delta - alpha_u;
    let dv = delta - alpha_v;
    if du.abs() <= 1e-12 * scale || dv.abs() <= 1e-12 * scale {
        return None;
    }
    Some(2.0 * PI * j * j * (1.0 / du - 1.0 / dv))
}

impl DeviceModel {
    /// The bundled five-qubit star device.
    pub fn soprano_d() -> Self {
        Self::from_toml_str(SOPRANO_D_TOML, "soprano_d.toml").expect("bundled device is valid")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text, &path.display().to_string())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_toml_string()).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn from_toml_str(text: &str, origin: &str) -> Result<Self> {
        let raw: RawDevice =
            toml::from_str(text).map_err(|e| Error::parse(origin, e.message().to_string()))?;
        let model = raw.into_model()?;
        model.validate()?;
        Ok(model)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(&RawDevice::from_model(self)).expect("device serializes")
    }

    /// SHA-256 of the canonical serialization, hex encoded.
    pub fn fingerprint(&self) -> String {
        let digest = Sha256::digest(self.to_toml_string().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn num_qubits(&self) -> usize {
        self.qubits.len()
    }

    pub fn qubit(&self, index: usize) -> Result<&QubitCalibration> {
        self.qubits.get(index).ok_or(Error::IndexOutOfRange {
            index,
            size: self.qubits.len(),
        })
    }

    pub fn coupling(&self, edge: Edge) -> Option<&CouplingCalibration> {
        self.couplings.iter().find(|c| c.edge() == edge)
    }

    /// All coupling edges in label order.
    pub fn edges(&self) -> Vec<Edge> {
        let mut edges: Vec<Edge> = self.couplings.iter().map(|c| c.edge()).collect();
        edges.sort();
        edges
    }

    pub fn neighbors(&self, q: usize) -> BTreeSet<usize> {
        self.couplings
            .iter()
            .filter_map(|c| {
                if c.high == q {
                    Some(c.low)
                } else if c.low == q {
                    Some(c.high)
                } else {
                    None
                }
            })
            .collect()
    }

    pub fn is_active(&self, q: usize) -> bool {
        self.active_qubits.binary_search(&q).is_ok()
    }

    pub fn duration(&self, kind: DurationKind) -> Result<f64> {
        self.durations
            .get(&kind)
            .copied()
            .ok_or(Error::UnknownDuration(kind.name()))
    }

    /// ZZ rate of `edge` using its calibrated coupling strength.
    pub fn beta(&self, edge: Edge) -> Result<f64> {
        let coupling = self
            .coupling(edge)
            .ok_or_else(|| Error::MissingCalibration(format!("no coupling on pair {edge}")))?;
        self.beta_with_coupling(edge, coupling.coupling_j)
    }

    /// ZZ rate of `edge` with the coupling strength overridden by `j` (Hz).
    pub fn beta_with_coupling(&self, edge: Edge, j: f64) -> Result<f64> {
        let coupling = self
            .coupling(edge)
            .ok_or_else(|| Error::MissingCalibration(format!("no coupling on pair {edge}")))?;
        let u = self.qubit(coupling.high)?;
        let v = self.qubit(coupling.low)?;
        zz_rate(j, u.frequency, v.frequency, u.anharmonicity, v.anharmonicity)
            .ok_or(Error::CrosstalkPole(edge))
    }

    /// Checks every invariant of the snapshot; the first violation is
    /// reported with the offending qubit or pair.
    pub fn validate(&self) -> Result<()> {
        for (pos, q) in self.qubits.iter().enumerate() {
            if q.index != pos {
                return Err(Error::validation(format!(
                    "qubit indices must be contiguous from 0; found qubit {} at position {pos}",
                    q.index
                )));
            }
            let name = format!("qubit {}", q.index);
            if !(q.frequency.is_finite() && q.frequency > 0.0) {
                return Err(Error::validation(format!("{name}: frequency must be positive")));
            }
            if !q.anharmonicity.is_finite() {
                return Err(Error::validation(format!("{name}: anharmonicity must be finite")));
            }
            if !(q.t1 > 0.0) || !(q.t2 > 0.0) {
                return Err(Error::validation(format!("{name}: t1 and t2 must be positive")));
            }
            if q.t2 > 2.0 * q.t1 {
                return Err(Error::validation(format!("{name}: t2 exceeds 2·t1")));
            }
            if !(0.0..=1.0).contains(&q.p_excited) {
                return Err(Error::validation(format!("{name}: p_excited outside [0, 1]")));
            }
            q.confusion
                .validate()
                .map_err(|e| Error::validation(format!("{name}: {e}")))?;
            if !(2.0 / 3.0..=1.0).contains(&q.single_qubit_fidelity) {
                return Err(Error::validation(format!(
                    "{name}: single_qubit_fidelity {} outside [2/3, 1]",
                    q.single_qubit_fidelity
                )));
            }
        }

        let mut seen = BTreeSet::new();
        for c in &self.couplings {
            let edge = c.edge();
            if c.high == c.low {
                return Err(Error::validation(format!("coupling {edge} is a self-loop")));
            }
            for q in [c.high, c.low] {
                if q >= self.qubits.len() {
                    return Err(Error::validation(format!(
                        "coupling {edge}: qubit {q} does not exist"
                    )));
                }
            }
            if !seen.insert(edge) {
                return Err(Error::validation(format!("coupling {edge} is listed twice")));
            }
            if self.qubits[c.high].frequency <= self.qubits[c.low].frequency {
                return Err(Error::validation(format!(
                    "coupling {edge}: qubit {} must have the higher frequency",
                    c.high
                )));
            }
            if !(c.coupling_j.is_finite() && c.coupling_j >= 0.0) {
                return Err(Error::validation(format!(
                    "coupling {edge}: coupling strength must be non-negative"
                )));
            }
            if let Some(f) = c.cz_fidelity {
                if !(0.4..=1.0).contains(&f) {
                    return Err(Error::validation(format!(
                        "coupling {edge}: cz_fidelity {f} outside [0.4, 1]"
                    )));
                }
            }
        }

        for (kind, &d) in &self.durations {
            if !(d.is_finite() && d >= 0.0) {
                return Err(Error::validation(format!(
                    "duration of {} must be non-negative",
                    kind.name()
                )));
            }
        }
        if let Some(&rz) = self.durations.get(&DurationKind::Rz) {
            if rz != 0.0 {
                return Err(Error::validation("rz is a virtual gate; its duration must be 0"));
            }
        }

        let mut prev = None;
        for &q in &self.active_qubits {
            if q >= self.qubits.len() {
                return Err(Error::validation(format!("active qubit {q} does not exist")));
            }
            if prev.is_some_and(|p| p >= q) {
                return Err(Error::validation(
                    "active_qubits must be strictly ascending without duplicates",
                ));
            }
            prev = Some(q);
        }
        Ok(())
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDevice {
    device: RawHeader,
    durations: BTreeMap<String, f64>,
    qubit: BTreeMap<String, RawQubit>,
    #[serde(default)]
    coupling: BTreeMap<String, RawCoupling>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawHeader {
    name: String,
    active_qubits: Vec<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawQubit {
    frequency_ghz: f64,
    anharmonicity_mhz: f64,
    t1_ns: f64,
    t2_ns: f64,
    p_excited: f64,
    p0_given_0: f64,
    p1_given_0: f64,
    p0_given_1: f64,
    p1_given_1: f64,
    single_qubit_fidelity: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCoupling {
    coupling_khz: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    cz_fidelity: Option<f64>,
}

impl RawDevice {
    fn into_model(self) -> Result<DeviceModel> {
        let mut qubits = Vec::with_capacity(self.qubit.len());
        let mut indexed: Vec<(usize, RawQubit)> = Vec::new();
        for (key, raw) in self.qubit {
            let index: usize = key
                .parse()
                .map_err(|_| Error::validation(format!("[qubit.{key}]: index is not an integer")))?;
            indexed.push((index, raw));
        }
        indexed.sort_by_key(|(i, _)| *i);
        for (index, raw) in indexed {
            qubits.push(QubitCalibration {
                index,
                frequency: raw.frequency_ghz * GHZ,
                anharmonicity: raw.anharmonicity_mhz * MHZ,
                t1: raw.t1_ns * NS,
                t2: raw.t2_ns * NS,
                p_excited: raw.p_excited,
                confusion: ConfusionMatrix::new(
                    raw.p0_given_0,
                    raw.p0_given_1,
                    raw.p1_given_0,
                    raw.p1_given_1,
                ),
                single_qubit_fidelity: raw.single_qubit_fidelity,
            });
        }

        let mut couplings = Vec::with_capacity(self.coupling.len());
        for (key, raw) in self.coupling {
            let edge: Edge = key
                .parse()
                .map_err(|e| Error::validation(format!("[coupling.{key}]: {e}")))?;
            let (a, b) = (edge.lo(), edge.hi());
            let freq = |q: usize| {
                qubits.get(q).map(|c: &QubitCalibration| c.frequency).ok_or_else(|| {
                    Error::validation(format!("coupling {edge}: qubit {q} does not exist"))
                })
            };
            let (fa, fb) = (freq(a)?, freq(b)?);
            if fa == fb {
                return Err(Error::validation(format!(
                    "coupling {edge}: endpoints have equal frequency"
                )));
            }
            let (high, low) = if fa > fb { (a, b) } else { (b, a) };
            couplings.push(CouplingCalibration {
                high,
                low,
                coupling_j: raw.coupling_khz * KHZ,
                cz_fidelity: raw.cz_fidelity,
            });
        }
        couplings.sort_by_key(|c| c.edge());

        let mut durations = BTreeMap::new();
        for (key, ns) in self.durations {
            let kind = DurationKind::from_name(&key)
                .ok_or_else(|| Error::validation(format!("[durations]: unknown gate `{key}`")))?;
            durations.insert(kind, ns * NS);
        }

        Ok(DeviceModel {
            name: self.device.name,
            qubits,
            couplings,
            durations,
            active_qubits: self.device.active_qubits,
        })
    }

    fn from_model(model: &DeviceModel) -> Self {
        let qubit = model
            .qubits
            .iter()
            .map(|q| {
                (
                    q.index.to_string(),
                    RawQubit {
                        frequency_ghz: q.frequency / GHZ,
                        anharmonicity_mhz: q.anharmonicity / MHZ,
                        t1_ns: q.t1 / NS,
                        t2_ns: q.t2 / NS,
                        p_excited: q.p_excited,
                        p0_given_0: q.confusion.p(0, 0),
                        p1_given_0: q.confusion.p(1, 0),
                        p0_given_1: q.confusion.p(0, 1),
                        p1_given_1: q.confusion.p(1, 1),
                        single_qubit_fidelity: q.single_qubit_fidelity,
                    },
                )
            })
            .collect();
        let coupling = model
            .couplings
            .iter()
            .map(|c| {
                (
                    format!("{}_{}", c.high, c.low),
                    RawCoupling {
                        coupling_khz: c.coupling_j / KHZ,
                        cz_fidelity: c.cz_fidelity,
                    },
                )
            })
            .collect();
        let durations = model
            .durations
            .iter()
            .map(|(k, s)| (k.name().to_string(), s / NS))
            .collect();
        RawDevice {
            device: RawHeader {
                name: model.name.clone(),
                active_qubits: model.active_qubits.clone(),
            },
            durations,
            qubit,
            coupling,
        }
    }
}

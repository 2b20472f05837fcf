//! Turns a scheduled circuit into a noisy circuit: the original gates with
//! error channels, idle decay and always-on ZZ evolution inserted.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::channels::{
    decay_channel, deph, deph2, delta1_from_fidelity, delta2_from_fidelity, gamp,
    ConfusionMatrix, QuantumChannel,
};
use crate::circuit::{Gate, GateKind};
use crate::device::{DeviceModel, Edge};
use crate::error::{Error, Result};
use crate::schedule::ScheduledCircuit;

const KHZ: f64 = 1e3;

/// Independent switches for each error source.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseToggles {
    pub single_qubit_gate_error: bool,
    pub two_qubit_gate_error: bool,
    /// State preparation and readout together.
    pub spam_error: bool,
    pub passive_decay: bool,
    pub crosstalk: bool,
}

impl Default for NoiseToggles {
    fn default() -> Self {
        Self::all_on()
    }
}

impl NoiseToggles {
    pub fn all_on() -> Self {
        NoiseToggles {
            single_qubit_gate_error: true,
            two_qubit_gate_error: true,
            spam_error: true,
            passive_decay: true,
            crosstalk: true,
        }
    }

    pub fn all_off() -> Self {
        NoiseToggles {
            single_qubit_gate_error: false,
            two_qubit_gate_error: false,
            spam_error: false,
            passive_decay: false,
            crosstalk: false,
        }
    }

    pub fn without(mut self, effect: Effect) -> Self {
        match effect {
            Effect::SingleQubitGate => self.single_qubit_gate_error = false,
            Effect::TwoQubitGate => self.two_qubit_gate_error = false,
            Effect::Spam => self.spam_error = false,
            Effect::Passive => self.passive_decay = false,
            Effect::AlwaysOn => self.crosstalk = false,
        }
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Effect {
    Passive,
    Spam,
    TwoQubitGate,
    SingleQubitGate,
    AlwaysOn,
}

impl Effect {
    pub const ALL: [Effect; 5] = [
        Effect::Passive,
        Effect::Spam,
        Effect::TwoQubitGate,
        Effect::SingleQubitGate,
        Effect::AlwaysOn,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Effect::Passive => "passive",
            Effect::Spam => "spam",
            Effect::TwoQubitGate => "2q",
            Effect::SingleQubitGate => "1q",
            Effect::AlwaysOn => "always_on",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|e| e.name() == name)
    }
}

/// Coupling strength used for the ZZ rate, Hz.
#[derive(Debug, Clone, PartialEq)]
pub enum Coupling {
    /// One strength for every coupler.
    Shared(f64),
    /// Per-coupler strengths; couplers not listed use the device value.
    PerPair(BTreeMap<Edge, f64>),
}

/// The fitted part of the error model plus the effect switches.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ParamsFile", into = "ParamsFile")]
pub struct NoiseParams {
    pub coupling: Coupling,
    /// CZ fidelities overriding the device calibration.
    pub cz_fidelity: BTreeMap<Edge, f64>,
    pub toggles: NoiseToggles,
    /// Unmeasured register qubits decay while the others are read out.
    pub decay_during_measurement: bool,
}

impl NoiseParams {
    /// Calibration values of `device`, all effects on.
    pub fn from_device(device: &DeviceModel) -> Self {
        NoiseParams {
            coupling: Coupling::PerPair(
                device
                    .couplings
                    .iter()
                    .map(|c| (c.edge(), c.coupling_j))
                    .collect(),
            ),
            cz_fidelity: device
                .couplings
                .iter()
                .filter_map(|c| c.cz_fidelity.map(|f| (c.edge(), f)))
                .collect(),
            toggles: NoiseToggles::all_on(),
            decay_during_measurement: true,
        }
    }

    pub fn with_toggles(mut self, toggles: NoiseToggles) -> Self {
        self.toggles = toggles;
        self
    }

    pub fn coupling_for(&self, edge: Edge, device: &DeviceModel) -> Result<f64> {
        match &self.coupling {
            Coupling::Shared(j) => Ok(*j),
            Coupling::PerPair(map) => match map.get(&edge) {
                Some(j) => Ok(*j),
                None => device
                    .coupling(edge)
                    .map(|c| c.coupling_j)
                    .ok_or_else(|| Error::MissingCalibration(format!("coupling on pair {edge}"))),
            },
        }
    }

    pub fn cz_fidelity_for(&self, edge: Edge, device: &DeviceModel) -> Result<f64> {
        self.cz_fidelity
            .get(&edge)
            .copied()
            .or_else(|| device.coupling(edge).and_then(|c| c.cz_fidelity))
            .ok_or_else(|| Error::MissingCalibration(format!("cz fidelity on pair {edge}")))
    }

    pub fn validate(&self) -> Result<()> {
        let check_j = |j: f64| {
            if j.is_finite() && j >= 0.0 {
                Ok(())
            } else {
                Err(Error::validation(format!("coupling strength {j} Hz must be finite and non-negative")))
            }
        };
        match &self.coupling {
            Coupling::Shared(j) => check_j(*j)?,
            Coupling::PerPair(m) => m.values().try_for_each(|&j| check_j(j))?,
        }
        for (e, &f) in &self.cz_fidelity {
            delta2_from_fidelity(f)
                .map_err(|_| Error::validation(format!("cz fidelity {f} on pair {e} outside [0.4, 1]")))?;
        }
        Ok(())
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(&ParamsFile::from(self.clone())).expect("params serialize")
    }

    pub fn from_toml_str(text: &str, origin: &str) -> Result<Self> {
        let file: ParamsFile = toml::from_str(text).map_err(|e| Error::parse(origin, e.to_string()))?;
        Self::try_from(file).map_err(|m| Error::parse(origin, m))
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ParamsFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    coupling_khz: Option<f64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    coupling_khz_per_pair: BTreeMap<String, f64>,
    #[serde(default)]
    cz_fidelity: BTreeMap<String, f64>,
    #[serde(default = "yes")]
    decay_during_measurement: bool,
    #[serde(default)]
    toggles: NoiseToggles,
}

fn yes() -> bool {
    true
}

impl From<NoiseParams> for ParamsFile {
    fn from(p: NoiseParams) -> Self {
        let (coupling_khz, coupling_khz_per_pair) = match p.coupling {
            Coupling::Shared(j) => (Some(j / KHZ), BTreeMap::new()),
            Coupling::PerPair(m) => (
                None,
                m.into_iter().map(|(e, j)| (e.to_string(), j / KHZ)).collect(),
            ),
        };
        ParamsFile {
            coupling_khz,
            coupling_khz_per_pair,
            cz_fidelity: p.cz_fidelity.into_iter().map(|(e, f)| (e.to_string(), f)).collect(),
            decay_during_measurement: p.decay_during_measurement,
            toggles: p.toggles,
        }
    }
}

impl TryFrom<ParamsFile> for NoiseParams {
    type Error = String;

    fn try_from(f: ParamsFile) -> std::result::Result<Self, String> {
        let edge = |k: &str| k.parse::<Edge>().map_err(|e| e.to_string());
        let coupling = match (f.coupling_khz, f.coupling_khz_per_pair.is_empty()) {
            (Some(j), true) => Coupling::Shared(j * KHZ),
            (None, _) => Coupling::PerPair(
                f.coupling_khz_per_pair
                    .iter()
                    .map(|(k, &j)| Ok((edge(k)?, j * KHZ)))
                    .collect::<std::result::Result<_, String>>()?,
            ),
            (Some(_), false) => {
                return Err("give either coupling_khz or coupling_khz_per_pair, not both".into())
            }
        };
        let params = NoiseParams {
            coupling,
            cz_fidelity: f
                .cz_fidelity
                .iter()
                .map(|(k, &v)| Ok((edge(k)?, v)))
                .collect::<std::result::Result<_, String>>()?,
            toggles: f.toggles,
            decay_during_measurement: f.decay_during_measurement,
        };
        params.validate().map_err(|e| e.to_string())?;
        Ok(params)
    }
}

/// Why a channel was inserted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseRule {
    StatePrep,
    SingleQubitGate,
    TwoQubitGate,
    IdleBefore,
    IdleAfter,
    Idle,
    MeasurementIdle,
}

impl NoiseRule {
    pub fn name(self) -> &'static str {
        match self {
            NoiseRule::StatePrep => "state-prep",
            NoiseRule::SingleQubitGate => "1q-gate",
            NoiseRule::TwoQubitGate => "2q-gate",
            NoiseRule::IdleBefore => "idle-before",
            NoiseRule::IdleAfter => "idle-after",
            NoiseRule::Idle => "idle",
            NoiseRule::MeasurementIdle => "measure-idle",
        }
    }

    pub fn is_decay(self) -> bool {
        matches!(
            self,
            NoiseRule::IdleBefore | NoiseRule::IdleAfter | NoiseRule::Idle | NoiseRule::MeasurementIdle
        )
    }
}

/// Parameters of an inserted channel. Times in s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ChannelSpec {
    /// Full amplitude damping to the thermal state.
    Reset { p_excited: f64 },
    Deph { delta: f64 },
    Deph2 { delta: f64 },
    Decay {
        t1: f64,
        t2: f64,
        p_excited: f64,
        duration: f64,
    },
}

impl ChannelSpec {
    pub fn build(&self) -> Result<QuantumChannel> {
        match *self {
            ChannelSpec::Reset { p_excited } => gamp(1.0, p_excited),
            ChannelSpec::Deph { delta } => deph(delta),
            ChannelSpec::Deph2 { delta } => deph2(delta),
            ChannelSpec::Decay {
                t1,
                t2,
                p_excited,
                duration,
            } => decay_channel(t1, t2, p_excited, duration),
        }
    }

    pub fn arity(&self) -> usize {
        match self {
            ChannelSpec::Deph2 { .. } => 2,
            _ => 1,
        }
    }
}

impl fmt::Display for ChannelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            ChannelSpec::Reset { p_excited } => write!(f, "gamp(1, p={p_excited:.6})"),
            ChannelSpec::Deph { delta } => write!(f, "deph({delta:.6})"),
            ChannelSpec::Deph2 { delta } => write!(f, "deph2({delta:.6})"),
            ChannelSpec::Decay { duration, .. } => write!(f, "decay({:.3}ns)", duration * 1e9),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum NoisyOp {
    Gate {
        /// Index into the source circuit.
        index: usize,
        gate: Gate,
    },
    Channel {
        qubits: Vec<usize>,
        spec: ChannelSpec,
        rule: NoiseRule,
    },
    /// `exp(-i β d Z⊗Z)` on a coupler.
    Crosstalk { edge: Edge, beta: f64, duration: f64 },
}

impl fmt::Display for NoisyOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let qs = |qs: &[usize]| {
            qs.iter()
                .map(|q| format!("q{q}"))
                .collect::<Vec<_>>()
                .join(" ")
        };
        match self {
            NoisyOp::Gate { gate, .. } => match gate.kind.angle() {
                Some(t) => write!(f, "{}({t:.6}) {}", gate.kind.name(), qs(&gate.qubits)),
                None => write!(f, "{} {}", gate.kind.name(), qs(&gate.qubits)),
            },
            NoisyOp::Channel { qubits, spec, rule } => {
                write!(f, "{spec} {} [{}]", qs(qubits), rule.name())
            }
            NoisyOp::Crosstalk { edge, beta, duration } => write!(
                f,
                "ct(beta={beta:.6e} rad/s, d={:.3}ns) q{} q{}",
                duration * 1e9,
                edge.lo(),
                edge.hi()
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoisyLayer {
    pub start: f64,
    pub duration: f64,
    pub ops: Vec<NoisyOp>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoisyMeasurement {
    pub start: f64,
    pub duration: f64,
    pub ops: Vec<NoisyOp>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoisyCircuit {
    pub name: String,
    /// Simulated qubits, ascending.
    pub register: Vec<usize>,
    pub prep: Vec<NoisyOp>,
    pub layers: Vec<NoisyLayer>,
    pub measurement: Option<NoisyMeasurement>,
    /// Measured qubits, ascending.
    pub measured: Vec<usize>,
    /// Readout map per measured qubit.
    pub readout: Vec<ConfusionMatrix>,
}

impl NoisyCircuit {
    /// Every operation in execution order.
    pub fn ops(&self) -> impl Iterator<Item = &NoisyOp> {
        self.prep
            .iter()
            .chain(self.layers.iter().flat_map(|l| l.ops.iter()))
            .chain(self.measurement.iter().flat_map(|m| m.ops.iter()))
    }

    /// Source gate indices left after removing every inserted operation.
    pub fn strip(&self) -> Vec<usize> {
        self.ops()
            .filter_map(|op| match op {
                NoisyOp::Gate { index, .. } => Some(*index),
                _ => None,
            })
            .collect()
    }

    pub fn position(&self, qubit: usize) -> Option<usize> {
        self.register.binary_search(&qubit).ok()
    }
}

impl fmt::Display for NoisyCircuit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let reg: Vec<String> = self.register.iter().map(|q| format!("q{q}")).collect();
        writeln!(f, "circuit {}", self.name)?;
        writeln!(f, "register {}", reg.join(" "))?;
        if !self.prep.is_empty() {
            writeln!(f, "prep")?;
            for op in &self.prep {
                writeln!(f, "  {op}")?;
            }
        }
        for (i, l) in self.layers.iter().enumerate() {
            writeln!(
                f,
                "layer {i} @ {:.3}ns for {:.3}ns",
                l.start * 1e9,
                l.duration * 1e9
            )?;
            for op in &l.ops {
                writeln!(f, "  {op}")?;
            }
        }
        if let Some(m) = &self.measurement {
            let qs: Vec<String> = self.measured.iter().map(|q| format!("q{q}")).collect();
            writeln!(
                f,
                "measure {} @ {:.3}ns for {:.3}ns",
                qs.join(" "),
                m.start * 1e9,
                m.duration * 1e9
            )?;
            for op in &m.ops {
                writeln!(f, "  {op}")?;
            }
            for (q, c) in self.measured.iter().zip(&self.readout) {
                if !c.is_identity() {
                    writeln!(
                        f,
                        "  readout q{q} p1|0={:.4} p0|1={:.4}",
                        c.p(1, 0),
                        c.p(0, 1)
                    )?;
                }
            }
        }
        Ok(())
    }
}

/// Couplers with at least one endpoint in `qubits`, ordered by label.
pub fn crosstalk_edges(device: &DeviceModel, qubits: &BTreeSet<usize>) -> Vec<Edge> {
    device
        .edges()
        .into_iter()
        .filter(|e| qubits.contains(&e.lo()) || qubits.contains(&e.hi()))
        .collect()
}

fn decay_op(device: &DeviceModel, q: usize, duration: f64, rule: NoiseRule) -> Result<NoisyOp> {
    let c = device.qubit(q)?;
    Ok(NoisyOp::Channel {
        qubits: vec![q],
        spec: ChannelSpec::Decay {
            t1: c.t1,
            t2: c.t2,
            p_excited: c.p_excited,
            duration,
        },
        rule,
    })
}

pub fn transpile_noise(
    scheduled: &ScheduledCircuit,
    device: &DeviceModel,
    params: &NoiseParams,
) -> Result<NoisyCircuit> {
    let circuit = &scheduled.circuit;
    let toggles = params.toggles;
    let used = circuit.used_qubits();
    for &q in &used {
        if q >= device.num_qubits() || !device.is_active(q) {
            return Err(Error::validation(format!(
                "q{q} is not an active qubit of device `{}`",
                device.name
            )));
        }
    }
    for g in circuit.gates() {
        if g.kind == GateKind::Cz {
            let e = Edge::new(g.qubits[0], g.qubits[1]);
            if device.coupling(e).is_none() {
                return Err(Error::NotAnEdge(e));
            }
        }
    }

    let edges = if toggles.crosstalk {
        crosstalk_edges(device, &used)
    } else {
        Vec::new()
    };
    let mut betas = Vec::with_capacity(edges.len());
    for &e in &edges {
        betas.push(device.beta_with_coupling(e, params.coupling_for(e, device)?)?);
    }
    let register: Vec<usize> = used
        .iter()
        .copied()
        .chain(edges.iter().flat_map(|e| [e.lo(), e.hi()]))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();

    let prep = if toggles.spam_error {
        register
            .iter()
            .map(|&q| {
                Ok(NoisyOp::Channel {
                    qubits: vec![q],
                    spec: ChannelSpec::Reset {
                        p_excited: device.qubit(q)?.p_excited,
                    },
                    rule: NoiseRule::StatePrep,
                })
            })
            .collect::<Result<Vec<_>>>()?
    } else {
        Vec::new()
    };

    let mut layers = Vec::with_capacity(scheduled.layers.len());
    for layer in &scheduled.layers {
        let mut ops = Vec::new();
        if toggles.passive_decay {
            for (&q, t) in &layer.timing {
                if t.idle_before > 0.0 {
                    ops.push(decay_op(device, q, t.idle_before, NoiseRule::IdleBefore)?);
                }
            }
        }
        for slot in &layer.slots {
            for &i in &slot.gates {
                let gate = circuit.gates()[i].clone();
                let error = match gate.kind {
                    GateKind::Rx(_) | GateKind::Ry(_) if toggles.single_qubit_gate_error => {
                        let q = gate.qubits[0];
                        Some(NoisyOp::Channel {
                            qubits: vec![q],
                            spec: ChannelSpec::Deph {
                                delta: delta1_from_fidelity(device.qubit(q)?.single_qubit_fidelity)?,
                            },
                            rule: NoiseRule::SingleQubitGate,
                        })
                    }
                    GateKind::Cz if toggles.two_qubit_gate_error => {
                        let e = Edge::new(gate.qubits[0], gate.qubits[1]);
                        Some(NoisyOp::Channel {
                            qubits: gate.qubits.clone(),
                            spec: ChannelSpec::Deph2 {
                                delta: delta2_from_fidelity(params.cz_fidelity_for(e, device)?)?,
                            },
                            rule: NoiseRule::TwoQubitGate,
                        })
                    }
                    _ => None,
                };
                ops.push(NoisyOp::Gate { index: i, gate });
                ops.extend(error);
            }
        }
        if toggles.passive_decay {
            for &q in &register {
                match layer.timing.get(&q) {
                    Some(t) if t.idle_after > 0.0 => {
                        let rule = if t.busy > 0.0 || t.idle_before > 0.0 {
                            NoiseRule::IdleAfter
                        } else {
                            NoiseRule::Idle
                        };
                        ops.push(decay_op(device, q, t.idle_after, rule)?);
                    }
                    Some(_) => {}
                    None if layer.duration > 0.0 => {
                        ops.push(decay_op(device, q, layer.duration, NoiseRule::Idle)?);
                    }
                    None => {}
                }
            }
        }
        for (&edge, &beta) in edges.iter().zip(&betas) {
            let span = |q: usize| layer.timing.get(&q).map_or(layer.duration, |t| t.span());
            ops.push(NoisyOp::Crosstalk {
                edge,
                beta,
                duration: span(edge.lo()).max(span(edge.hi())),
            });
        }
        layers.push(NoisyLayer {
            start: layer.start,
            duration: layer.duration,
            ops,
        });
    }

    let measured = circuit.measured();
    let measurement = match &scheduled.measurement {
        Some(m) => {
            let mut ops = Vec::new();
            if toggles.passive_decay && params.decay_during_measurement && m.duration > 0.0 {
                for &q in register.iter().filter(|q| !measured.contains(q)) {
                    ops.push(decay_op(device, q, m.duration, NoiseRule::MeasurementIdle)?);
                }
            }
            Some(NoisyMeasurement {
                start: m.start,
                duration: m.duration,
                ops,
            })
        }
        None => None,
    };
    let readout = measured
        .iter()
        .map(|&q| {
            Ok(if toggles.spam_error {
                device.qubit(q)?.confusion
            } else {
                ConfusionMatrix::identity()
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(NoisyCircuit {
        name: circuit.name.clone(),
        register,
        prep,
        layers,
        measurement,
        measured,
        readout,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::Circuit;
    use crate::schedule::schedule_alap;
    use approx::assert_abs_diff_eq;

    fn single_layer_circuit() -> Circuit {
        let mut c = Circuit::new("single_layer", 5);
        c.push(Gate::rx(1, 1.0)).unwrap();
        c.push(Gate::cz(2, 3)).unwrap();
        c.measure(&[0, 1, 2, 3]).unwrap();
        c
    }

    fn noisy(c: &Circuit, params: &NoiseParams) -> NoisyCircuit {
        let dev = DeviceModel::soprano_d();
        transpile_noise(&schedule_alap(c, &dev).unwrap(), &dev, params).unwrap()
    }

    #[test]
    fn inserts_channels_in_layer_order() {
        let dev = DeviceModel::soprano_d();
        let n = noisy(&single_layer_circuit(), &NoiseParams::from_device(&dev));
        assert_eq!(n.register, vec![0, 1, 2, 3, 4]);
        assert_eq!(n.prep.len(), 5);
        let ops = &n.layers[0].ops;
        let summary: Vec<String> = ops
            .iter()
            .map(|op| match op {
                NoisyOp::Gate { gate, .. } => format!("{}{:?}", gate.kind.name(), gate.qubits),
                NoisyOp::Channel { qubits, rule, .. } => format!("{}{:?}", rule.name(), qubits),
                NoisyOp::Crosstalk { edge, .. } => format!("ct{edge}"),
            })
            .collect();
        assert_eq!(
            summary,
            vec![
                "rx[1]",
                "1q-gate[1]",
                "cz[2, 3]",
                "2q-gate[2, 3]",
                "idle[0]",
                "idle-after[1]",
                "idle[4]",
                "ct0-2",
                "ct1-2",
                "ct2-3",
                "ct2-4",
            ]
        );
        match &ops[5] {
            NoisyOp::Channel {
                spec: ChannelSpec::Decay { duration, .. },
                ..
            } => assert_abs_diff_eq!(*duration, 13e-9, epsilon = 1e-18),
            other => panic!("{other:?}"),
        }
        for op in &ops[7..] {
            match op {
                NoisyOp::Crosstalk { duration, .. } => {
                    assert_abs_diff_eq!(*duration, 45e-9, epsilon = 1e-18)
                }
                other => panic!("{other:?}"),
            }
        }
        let m = n.measurement.as_ref().unwrap();
        assert_eq!(m.ops.len(), 1);
        assert_eq!(n.strip(), vec![0, 1]);
    }

    #[test]
    fn toggles_remove_their_channels() {
        let dev = DeviceModel::soprano_d();
        let off = NoiseParams::from_device(&dev).with_toggles(NoiseToggles::all_off());
        let n = noisy(&single_layer_circuit(), &off);
        assert_eq!(n.register, vec![0, 1, 2, 3]);
        assert!(n.ops().all(|op| matches!(op, NoisyOp::Gate { .. })));
        assert!(n.readout.iter().all(|c| c.is_identity()));

        let no_ct = NoiseParams::from_device(&dev)
            .with_toggles(NoiseToggles::all_on().without(Effect::AlwaysOn));
        let n = noisy(&single_layer_circuit(), &no_ct);
        assert!(!n.ops().any(|op| matches!(op, NoisyOp::Crosstalk { .. })));
    }

    #[test]
    fn rejects_non_edges_and_inactive_qubits() {
        let dev = DeviceModel::soprano_d();
        let p = NoiseParams::from_device(&dev);
        let mut c = Circuit::new("bad", 4);
        c.push(Gate::cz(0, 1)).unwrap();
        let s = schedule_alap(&c, &dev).unwrap();
        assert!(matches!(
            transpile_noise(&s, &dev, &p),
            Err(Error::NotAnEdge(_))
        ));
        let mut c = Circuit::new("inactive", 5);
        c.push(Gate::rx(4, 1.0)).unwrap();
        let s = schedule_alap(&c, &dev).unwrap();
        assert!(transpile_noise(&s, &dev, &p).unwrap_err().is_validation());
    }

    #[test]
    fn missing_cz_fidelity_is_reported() {
        let mut dev = DeviceModel::soprano_d();
        dev.couplings.iter_mut().for_each(|c| c.cz_fidelity = None);
        let mut p = NoiseParams::from_device(&dev);
        p.cz_fidelity.clear();
        let mut c = Circuit::new("cz", 3);
        c.push(Gate::cz(0, 2)).unwrap();
        let s = schedule_alap(&c, &dev).unwrap();
        assert!(matches!(
            transpile_noise(&s, &dev, &p),
            Err(Error::MissingCalibration(_))
        ));
    }

    #[test]
    fn params_round_trip_through_toml_and_json() {
        let dev = DeviceModel::soprano_d();
        let mut p = NoiseParams::from_device(&dev);
        p.toggles.crosstalk = false;
        let back = NoiseParams::from_toml_str(&p.to_toml_string(), "mem").unwrap();
        assert_eq!(back.cz_fidelity, p.cz_fidelity);
        assert_eq!(back.toggles, p.toggles);
        let shared = NoiseParams {
            coupling: Coupling::Shared(2.5e6),
            ..p
        };
        let json = serde_json::to_string(&shared).unwrap();
        let back: NoiseParams = serde_json::from_str(&json).unwrap();
        match back.coupling {
            Coupling::Shared(j) => assert_abs_diff_eq!(j, 2.5e6, epsilon = 1e-6),
            other => panic!("{other:?}"),
        }
        assert!(NoiseParams::from_toml_str("coupling_khz = 1.0\n[cz_fidelity]\n\"0-2\" = 0.1\n", "m").is_err());
    }

    #[test]
    fn render_lists_every_op() {
        let dev = DeviceModel::soprano_d();
        let n = noisy(&single_layer_circuit(), &NoiseParams::from_device(&dev));
        let text = n.to_string();
        assert!(text.contains("decay(13.000ns) q1 [idle-after]"));
        assert!(text.contains("readout q3"));
        assert_eq!(text.lines().filter(|l| l.starts_with("  ")).count(), n.ops().count() + 4);
    }
}

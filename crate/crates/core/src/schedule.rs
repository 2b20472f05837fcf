//! Dependency graph and as-late-as-possible layering.
//!
//! Timed gates (rx, ry, cz) are assigned to layers; a layer is a time window
//! as long as its slowest gate, and layers follow each other back to back.
//! Virtual rz gates take no time and ride along with the next timed gate on
//! their wire. Measurements all happen in one final window.

use std::collections::{BTreeMap, BTreeSet};

use crate::circuit::{Circuit, GateKind};
use crate::device::{DeviceModel, DurationKind};
use crate::error::Result;

/// Gate dependency graph: an edge joins consecutive gates sharing a wire.
#[derive(Debug, Clone)]
pub struct Dag {
    preds: Vec<Vec<usize>>,
    succs: Vec<Vec<usize>>,
}

impl Dag {
    pub fn len(&self) -> usize {
        self.preds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.preds.is_empty()
    }

    pub fn preds(&self, node: usize) -> &[usize] {
        &self.preds[node]
    }

    pub fn succs(&self, node: usize) -> &[usize] {
        &self.succs[node]
    }

    /// Longest path through the graph where node `i` weighs `weight(i)`.
    pub fn longest_path(&self, weight: impl Fn(usize) -> usize) -> usize {
        let mut head = vec![0usize; self.len()];
        let mut best = 0;
        for i in 0..self.len() {
            let start = self.preds[i].iter().map(|&p| head[p]).max().unwrap_or(0);
            head[i] = start + weight(i);
            best = best.max(head[i]);
        }
        best
    }
}

fn wires(circuit: &Circuit, idx: usize) -> Vec<usize> {
    let g = &circuit.gates()[idx];
    if g.kind == GateKind::Barrier && g.qubits.is_empty() {
        (0..circuit.num_qubits()).collect()
    } else {
        g.qubits.clone()
    }
}

/// Dependency graph over all gates, in circuit order.
pub fn build_dag(circuit: &Circuit) -> Dag {
    dag_over(circuit, |_| true)
}

fn dag_over(circuit: &Circuit, keep: impl Fn(usize) -> bool) -> Dag {
    let n = circuit.gates().len();
    let mut preds = vec![Vec::new(); n];
    let mut succs = vec![Vec::new(); n];
    let mut last: Vec<Option<usize>> = vec![None; circuit.num_qubits()];
    for i in (0..n).filter(|&i| keep(i)) {
        for q in wires(circuit, i) {
            if let Some(p) = last[q] {
                if !preds[i].contains(&p) {
                    preds[i].push(p);
                    succs[p].push(i);
                }
            }
            last[q] = Some(i);
        }
    }
    Dag { preds, succs }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Layering {
    #[default]
    Alap,
    Asap,
}

/// Where a gate sits inside a window longer than itself.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Alignment {
    #[default]
    Start,
    End,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ScheduleOptions {
    pub layering: Layering,
    pub alignment: Alignment,
}

/// One instruction of a layer: a timed gate plus the virtual rz gates that
/// execute immediately before it on its wires.
#[derive(Debug, Clone, PartialEq)]
pub struct Slot {
    /// Gate indices in execution order; the timed gate is last.
    pub gates: Vec<usize>,
    /// Index of the timed gate, `None` in a virtual-only slot.
    pub timed: Option<usize>,
    pub qubits: Vec<usize>,
    /// Absolute start time, s.
    pub start: f64,
    pub duration: f64,
}

/// Busy and idle time of one wire inside a layer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitTiming {
    pub busy: f64,
    pub idle_before: f64,
    pub idle_after: f64,
}

impl QubitTiming {
    pub fn idle(&self) -> f64 {
        self.idle_before + self.idle_after
    }

    pub fn span(&self) -> f64 {
        self.busy + self.idle()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub start: f64,
    pub duration: f64,
    pub slots: Vec<Slot>,
    /// Every wire used by the circuit, whether or not it has a slot here.
    pub timing: BTreeMap<usize, QubitTiming>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementLayer {
    pub start: f64,
    pub duration: f64,
    pub qubits: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScheduledCircuit {
    pub circuit: Circuit,
    pub layers: Vec<Layer>,
    pub measurement: Option<MeasurementLayer>,
}

impl ScheduledCircuit {
    /// Gate indices in the order the layers execute them.
    pub fn gate_order(&self) -> Vec<usize> {
        self.layers
            .iter()
            .flat_map(|l| l.slots.iter().flat_map(|s| s.gates.iter().copied()))
            .collect()
    }

    /// End of the last gate layer, s.
    pub fn gate_duration(&self) -> f64 {
        self.layers.last().map_or(0.0, |l| l.start + l.duration)
    }

    pub fn total_duration(&self) -> f64 {
        self.gate_duration() + self.measurement.as_ref().map_or(0.0, |m| m.duration)
    }
}

pub fn schedule_alap(circuit: &Circuit, device: &DeviceModel) -> Result<ScheduledCircuit> {
    schedule(circuit, device, ScheduleOptions::default())
}

pub fn schedule(
    circuit: &Circuit,
    device: &DeviceModel,
    options: ScheduleOptions,
) -> Result<ScheduledCircuit> {
    let gates = circuit.gates();
    let mut durations = vec![0.0; gates.len()];
    for (i, g) in gates.iter().enumerate() {
        if let Some(kind) = g.kind.duration_kind() {
            durations[i] = device.duration(kind)?;
        }
    }
    let measured = circuit.measured();
    let measure_duration = if measured.is_empty() {
        0.0
    } else {
        device.duration(DurationKind::Measure)?
    };

    let is_timed = |i: usize| gates[i].kind.is_timed();
    let dag = dag_over(circuit, |i| !matches!(gates[i].kind, GateKind::Rz(_)));
    let weight = |i: usize| usize::from(is_timed(i));

    let mut level = vec![0usize; gates.len()];
    let num_layers = match options.layering {
        Layering::Alap => {
            let mut tail = vec![0usize; gates.len()];
            for i in (0..gates.len()).rev() {
                tail[i] = dag.succs[i]
                    .iter()
                    .map(|&s| tail[s] + weight(s))
                    .max()
                    .unwrap_or(0);
            }
            let total = (0..gates.len())
                .filter(|&i| is_timed(i))
                .map(|i| tail[i] + 1)
                .max()
                .unwrap_or(0);
            for i in (0..gates.len()).filter(|&i| is_timed(i)) {
                level[i] = total - 1 - tail[i];
            }
            total
        }
        Layering::Asap => {
            let mut head = vec![0usize; gates.len()];
            let mut total = 0;
            for i in 0..gates.len() {
                head[i] = dag.preds[i]
                    .iter()
                    .map(|&p| head[p] + weight(p))
                    .max()
                    .unwrap_or(0);
                if is_timed(i) {
                    level[i] = head[i];
                    total = total.max(head[i] + 1);
                }
            }
            total
        }
    };

    // Attach each rz to the next timed gate on its wire.
    let mut prefix: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    let mut pending: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, g) in gates.iter().enumerate() {
        match g.kind {
            GateKind::Rz(_) => pending.entry(g.qubits[0]).or_default().push(i),
            _ if g.kind.is_timed() => {
                let entry = prefix.entry(i).or_default();
                for q in &g.qubits {
                    entry.extend(pending.remove(q).unwrap_or_default());
                }
            }
            _ => {}
        }
    }
    let mut raw_layers: Vec<Vec<(Vec<usize>, Option<usize>, Vec<usize>)>> =
        vec![Vec::new(); num_layers];
    for i in (0..gates.len()).filter(|&i| is_timed(i)) {
        let mut seq = prefix.remove(&i).unwrap_or_default();
        seq.push(i);
        raw_layers[level[i]].push((seq, Some(i), gates[i].qubits.clone()));
    }
    if !pending.is_empty() {
        raw_layers.push(
            pending
                .into_iter()
                .map(|(q, seq)| (seq, None, vec![q]))
                .collect(),
        );
    }

    let used: BTreeSet<usize> = circuit.used_qubits();
    let mut layers = Vec::with_capacity(raw_layers.len());
    let mut clock = 0.0;
    for raw in raw_layers {
        let slot_duration = |timed: Option<usize>| timed.map_or(0.0, |i| durations[i]);
        let duration = raw
            .iter()
            .map(|(_, t, _)| slot_duration(*t))
            .fold(0.0, f64::max);
        let mut timing: BTreeMap<usize, QubitTiming> = used
            .iter()
            .map(|&q| {
                (
                    q,
                    QubitTiming {
                        busy: 0.0,
                        idle_before: 0.0,
                        idle_after: duration,
                    },
                )
            })
            .collect();
        let mut slots = Vec::with_capacity(raw.len());
        for (seq, timed, qubits) in raw {
            let busy = slot_duration(timed);
            let idle = duration - busy;
            let (before, after) = match options.alignment {
                Alignment::Start => (0.0, idle),
                Alignment::End => (idle, 0.0),
            };
            for &q in &qubits {
                timing.insert(
                    q,
                    QubitTiming {
                        busy,
                        idle_before: before,
                        idle_after: after,
                    },
                );
            }
            slots.push(Slot {
                gates: seq,
                timed,
                qubits,
                start: clock + before,
                duration: busy,
            });
        }
        layers.push(Layer {
            start: clock,
            duration,
            slots,
            timing,
        });
        clock += duration;
    }

    let measurement = (!measured.is_empty()).then(|| MeasurementLayer {
        start: clock,
        duration: measure_duration,
        qubits: measured,
    });

    Ok(ScheduledCircuit {
        circuit: circuit.clone(),
        layers,
        measurement,
    })
}

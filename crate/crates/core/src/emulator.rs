//! End-to-end emulation: schedule, insert noise, simulate, read out.

use crate::circuit::Circuit;
use crate::density::DensityMatrix;
use crate::device::DeviceModel;
use crate::distribution::ShotDistribution;
use crate::error::{Error, Result};
use crate::schedule::{schedule, ScheduleOptions, ScheduledCircuit};
use crate::transpile::{transpile_noise, NoiseParams, NoiseToggles, NoisyCircuit, NoisyOp};

/// Runs a noisy circuit from `|0…0⟩` over its register.
pub fn simulate(noisy: &NoisyCircuit) -> Result<DensityMatrix> {
    let mut state = DensityMatrix::zero_state(noisy.register.len())?;
    let pos = |q: usize| {
        noisy.position(q).ok_or(Error::IndexOutOfRange {
            index: q,
            size: noisy.register.len(),
        })
    };
    let positions = |qs: &[usize]| qs.iter().map(|&q| pos(q)).collect::<Result<Vec<_>>>();
    for op in noisy.ops() {
        match op {
            NoisyOp::Gate { gate, .. } => {
                let mut local = gate.clone();
                local.qubits = positions(&gate.qubits)?;
                state.apply_gate(&local)?;
            }
            NoisyOp::Channel { qubits, spec, .. } => {
                state.apply_channel(&spec.build()?, &positions(qubits)?)?;
            }
            NoisyOp::Crosstalk {
                edge,
                beta,
                duration,
            } => {
                let phases = crate::channels::crosstalk_phases(*beta, *duration);
                state.apply_diagonal(&phases, &[pos(edge.lo())?, pos(edge.hi())?])?;
            }
        }
    }
    Ok(state)
}

/// Measured-qubit distribution of a simulated state, before readout error.
pub fn measured_distribution(noisy: &NoisyCircuit, state: &DensityMatrix) -> Result<ShotDistribution> {
    let positions = noisy
        .measured
        .iter()
        .map(|&q| noisy.position(q).expect("measured qubits are in the register"))
        .collect::<Vec<_>>();
    ShotDistribution::from_probabilities(positions.len(), &state.probabilities(&positions)?)
}

#[derive(Debug, Clone)]
pub struct Emulation {
    pub scheduled: ScheduledCircuit,
    pub noisy: NoisyCircuit,
    pub state: DensityMatrix,
    /// Exact outcome distribution including readout error.
    pub distribution: ShotDistribution,
}

#[derive(Debug, Clone)]
pub struct Emulator<'a> {
    device: &'a DeviceModel,
    params: NoiseParams,
    schedule: ScheduleOptions,
}

impl<'a> Emulator<'a> {
    pub fn new(device: &'a DeviceModel, params: NoiseParams) -> Self {
        Emulator {
            device,
            params,
            schedule: ScheduleOptions::default(),
        }
    }

    /// Noise-free emulation.
    pub fn ideal(device: &'a DeviceModel) -> Self {
        Self::new(
            device,
            NoiseParams::from_device(device).with_toggles(NoiseToggles::all_off()),
        )
    }

    pub fn with_schedule(mut self, options: ScheduleOptions) -> Self {
        self.schedule = options;
        self
    }

    pub fn params(&self) -> &NoiseParams {
        &self.params
    }

    pub fn schedule(&self, circuit: &Circuit) -> Result<ScheduledCircuit> {
        schedule(circuit, self.device, self.schedule)
            .map_err(|e| Error::in_circuit(&circuit.name, e))
    }

    pub fn emulate(&self, circuit: &Circuit) -> Result<Emulation> {
        self.emulate_scheduled(self.schedule(circuit)?)
    }

    pub fn emulate_scheduled(&self, scheduled: ScheduledCircuit) -> Result<Emulation> {
        let label = scheduled.circuit.name.clone();
        let run = || -> Result<_> {
            if scheduled.circuit.measured().is_empty() {
                return Err(Error::validation("circuit measures no qubits"));
            }
            let noisy = transpile_noise(&scheduled, self.device, &self.params)?;
            let state = simulate(&noisy)?;
            let distribution = measured_distribution(&noisy, &state)?.with_readout(&noisy.readout)?;
            Ok((noisy, state, distribution))
        };
        let (noisy, state, distribution) = run().map_err(|e| Error::in_circuit(label, e))?;
        Ok(Emulation {
            scheduled,
            noisy,
            state,
            distribution,
        })
    }

    pub fn distribution(&self, circuit: &Circuit) -> Result<ShotDistribution> {
        Ok(self.emulate(circuit)?.distribution)
    }

    pub fn distribution_scheduled(&self, scheduled: &ScheduledCircuit) -> Result<ShotDistribution> {
        Ok(self.emulate_scheduled(scheduled.clone())?.distribution)
    }
}

//! Fitting noise parameters to reference distributions.

pub mod de;

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Mutex;

use rayon::prelude::*;

use crate::circuit::Circuit;
use crate::device::{DeviceModel, Edge};
use crate::distribution::{derive_seed, tvd, ShotDistribution};
use crate::emulator::Emulator;
use crate::error::{Error, Result};
use crate::schedule::ScheduledCircuit;
use crate::transpile::{Coupling, Effect, NoiseParams};

pub use de::{DeConfig, DeOutcome};

/// A circuit with its measured (or synthetic) outcome distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct Case {
    pub label: String,
    pub circuit: Circuit,
    pub reference: ShotDistribution,
}

/// How the cost emulates each circuit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Evaluation {
    #[default]
    Exact,
    /// Emulated distributions are resampled with a fixed seed per case.
    Sampled { shots: u64, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Parameter {
    SharedCoupling,
    Coupling(Edge),
    CzFidelity(Edge),
}

impl fmt::Display for Parameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Parameter::SharedCoupling => write!(f, "J"),
            Parameter::Coupling(e) => write!(f, "J[{e}]"),
            Parameter::CzFidelity(e) => write!(f, "F_cz[{e}]"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bound {
    pub parameter: Parameter,
    pub lo: f64,
    pub hi: f64,
}

/// Free parameters with bounds; everything else comes from `base`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterSpace {
    pub base: NoiseParams,
    pub free: Vec<Bound>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CouplingMode {
    #[default]
    Shared,
    PerPair,
}

/// Couplers whose endpoints are both active.
pub fn active_edges(device: &DeviceModel) -> Vec<Edge> {
    device
        .edges()
        .into_iter()
        .filter(|e| device.is_active(e.lo()) && device.is_active(e.hi()))
        .collect()
}

impl ParameterSpace {
    /// One coupling strength (or one per active coupler) in `[0, j_max]`
    /// and one CZ fidelity per active coupler in `fidelity_bounds`.
    pub fn standard(
        device: &DeviceModel,
        mode: CouplingMode,
        j_max: f64,
        fidelity_bounds: (f64, f64),
    ) -> Self {
        let edges = active_edges(device);
        let mut base = NoiseParams::from_device(device);
        let mut free = Vec::new();
        match mode {
            CouplingMode::Shared => {
                let js: Vec<f64> = edges
                    .iter()
                    .filter_map(|&e| device.coupling(e).map(|c| c.coupling_j))
                    .collect();
                let mean = js.iter().sum::<f64>() / js.len().max(1) as f64;
                base.coupling = Coupling::Shared(mean);
                free.push(Bound {
                    parameter: Parameter::SharedCoupling,
                    lo: 0.0,
                    hi: j_max,
                });
            }
            CouplingMode::PerPair => {
                free.extend(edges.iter().map(|&e| Bound {
                    parameter: Parameter::Coupling(e),
                    lo: 0.0,
                    hi: j_max,
                }));
            }
        }
        free.extend(edges.iter().map(|&e| Bound {
            parameter: Parameter::CzFidelity(e),
            lo: fidelity_bounds.0,
            hi: fidelity_bounds.1,
        }));
        ParameterSpace { base, free }
    }

    /// Drops `parameter` from the free set, fixing it at `value`.
    pub fn freeze(&mut self, parameter: Parameter, value: f64) {
        self.free.retain(|b| b.parameter != parameter);
        self.base = self.set(self.base.clone(), parameter, value);
    }

    fn set(&self, mut p: NoiseParams, parameter: Parameter, value: f64) -> NoiseParams {
        match parameter {
            Parameter::SharedCoupling => p.coupling = Coupling::Shared(value),
            Parameter::Coupling(e) => match &mut p.coupling {
                Coupling::PerPair(m) => {
                    m.insert(e, value);
                }
                Coupling::Shared(_) => {
                    p.coupling = Coupling::PerPair([(e, value)].into());
                }
            },
            Parameter::CzFidelity(e) => {
                p.cz_fidelity.insert(e, value);
            }
        }
        p
    }

    pub fn apply(&self, x: &[f64]) -> NoiseParams {
        debug_assert_eq!(x.len(), self.free.len());
        self.free
            .iter()
            .zip(x)
            .fold(self.base.clone(), |p, (b, &v)| self.set(p, b.parameter, v))
    }

    pub fn value(&self, params: &NoiseParams, parameter: Parameter, device: &DeviceModel) -> Result<f64> {
        match parameter {
            Parameter::SharedCoupling => match params.coupling {
                Coupling::Shared(j) => Ok(j),
                Coupling::PerPair(_) => Err(Error::validation("parameters use per-pair couplings")),
            },
            Parameter::Coupling(e) => params.coupling_for(e, device),
            Parameter::CzFidelity(e) => params.cz_fidelity_for(e, device),
        }
    }

    /// Free-parameter values of `params`.
    pub fn vector(&self, params: &NoiseParams, device: &DeviceModel) -> Result<Vec<f64>> {
        self.free
            .iter()
            .map(|b| self.value(params, b.parameter, device))
            .collect()
    }

    pub fn bounds(&self) -> Vec<(f64, f64)> {
        self.free.iter().map(|b| (b.lo, b.hi)).collect()
    }

    pub fn names(&self) -> Vec<String> {
        self.free.iter().map(|b| b.parameter.to_string()).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = BTreeSet::new();
        for b in &self.free {
            if !seen.insert(b.parameter) {
                return Err(Error::validation(format!("{} is listed twice", b.parameter)));
            }
            if !(b.lo.is_finite() && b.hi.is_finite() && b.lo < b.hi) {
                return Err(Error::validation(format!(
                    "bounds of {} must be finite and ordered, got [{}, {}]",
                    b.parameter, b.lo, b.hi
                )));
            }
            let (min, max) = match b.parameter {
                Parameter::CzFidelity(_) => (0.4, 1.0),
                _ => (0.0, f64::INFINITY),
            };
            if b.lo < min || b.hi > max {
                return Err(Error::validation(format!(
                    "bounds of {} must lie in [{min}, {max}], got [{}, {}]",
                    b.parameter, b.lo, b.hi
                )));
            }
        }
        self.base.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitProblem {
    pub device: DeviceModel,
    pub train: Vec<Case>,
    pub test: Vec<Case>,
    pub space: ParameterSpace,
    pub evaluation: Evaluation,
}

struct Prepared {
    label: String,
    scheduled: ScheduledCircuit,
    reference: ShotDistribution,
}

fn prepare(device: &DeviceModel, cases: &[Case]) -> Result<Vec<Prepared>> {
    let em = Emulator::new(device, NoiseParams::from_device(device));
    cases
        .iter()
        .map(|c| {
            Ok(Prepared {
                label: c.label.clone(),
                scheduled: em.schedule(&c.circuit)?,
                reference: c.reference.clone(),
            })
        })
        .collect()
}

fn mean_tvd(
    device: &DeviceModel,
    params: &NoiseParams,
    cases: &[Prepared],
    evaluation: Evaluation,
) -> Result<f64> {
    let em = Emulator::new(device, params.clone());
    let mut values = cases
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let mut d = em.distribution_scheduled(&c.scheduled)?;
            if let Evaluation::Sampled { shots, seed } = evaluation {
                d = d.sample(shots, derive_seed(seed, i))?;
            }
            tvd(&d, &c.reference).map_err(|e| Error::in_circuit(&c.label, e))
        })
        .collect::<Result<Vec<f64>>>()?;
    if values.is_empty() {
        return Err(Error::validation("no cases to evaluate"));
    }
    // Sorted summation keeps the mean independent of case order.
    values.sort_by(f64::total_cmp);
    Ok(values.iter().sum::<f64>() / values.len() as f64)
}

/// Mean TVD between emulated and reference distributions over `cases`.
pub fn cost(
    params: &NoiseParams,
    device: &DeviceModel,
    cases: &[Case],
    evaluation: Evaluation,
) -> Result<f64> {
    mean_tvd(device, params, &prepare(device, cases)?, evaluation)
}

impl FitProblem {
    pub fn validate(&self) -> Result<()> {
        self.space.validate()?;
        if self.train.is_empty() {
            return Err(Error::validation("training set is empty"));
        }
        let train: BTreeSet<&str> = self.train.iter().map(|c| c.label.as_str()).collect();
        if train.len() != self.train.len() {
            return Err(Error::validation("duplicate label in training set"));
        }
        if let Some(c) = self.test.iter().find(|c| train.contains(c.label.as_str())) {
            return Err(Error::validation(format!(
                "`{}` is in both training and test sets",
                c.label
            )));
        }
        Ok(())
    }

    pub fn train_cost(&self, params: &NoiseParams) -> Result<f64> {
        cost(params, &self.device, &self.train, self.evaluation)
    }

    pub fn test_cost(&self, params: &NoiseParams) -> Result<Option<f64>> {
        if self.test.is_empty() {
            return Ok(None);
        }
        cost(params, &self.device, &self.test, self.evaluation).map(Some)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub best_params: NoiseParams,
    pub parameter_names: Vec<String>,
    pub best_vector: Vec<f64>,
    pub train_cost: f64,
    /// `None` when the problem has no test cases.
    pub test_cost: Option<f64>,
    pub history: Vec<f64>,
    pub evaluations: usize,
    pub seed: u64,
}

pub fn fit(problem: &FitProblem, config: &DeConfig, seed: u64) -> Result<FitResult> {
    problem.validate()?;
    let device = &problem.device;
    let space = &problem.space;
    let train = prepare(device, &problem.train)?;
    let failure: Mutex<Option<Error>> = Mutex::new(None);
    let objective = |x: &[f64]| -> f64 {
        match mean_tvd(device, &space.apply(x), &train, problem.evaluation) {
            Ok(c) => c,
            Err(e) => {
                failure.lock().expect("no panics while held").get_or_insert(e);
                f64::INFINITY
            }
        }
    };
    let outcome = de::minimize(objective, &space.bounds(), config, seed)?;
    if let Some(e) = failure.into_inner().expect("no panics while held") {
        return Err(e);
    }

    let prior = space.vector(&space.base, device).unwrap_or_default();
    let bounds = space.bounds();
    let distance = |x: &[f64]| -> f64 {
        x.iter()
            .zip(&prior)
            .zip(&bounds)
            .map(|((v, p), (lo, hi))| ((v - p) / (hi - lo)).powi(2))
            .sum()
    };
    let (best_vector, train_cost) = outcome
        .population
        .iter()
        .min_by(|a, b| {
            a.1.total_cmp(&b.1)
                .then_with(|| distance(&a.0).total_cmp(&distance(&b.0)))
        })
        .cloned()
        .expect("population is not empty");
    let best_params = space.apply(&best_vector);
    let test_cost = problem.test_cost(&best_params)?;

    Ok(FitResult {
        best_params,
        parameter_names: space.names(),
        best_vector,
        train_cost,
        test_cost,
        history: outcome.history,
        evaluations: outcome.evaluations,
        seed,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct AblationRow {
    pub name: &'static str,
    /// The effect switched off, `None` for the full model.
    pub effect: Option<Effect>,
    pub mean_tvd: f64,
}

pub fn ablation_name(effect: Option<Effect>) -> &'static str {
    match effect {
        None => "Full model",
        Some(Effect::Passive) => "No passive errors",
        Some(Effect::Spam) => "No SPAM errors",
        Some(Effect::TwoQubitGate) => "No 2-qubit gate errors",
        Some(Effect::SingleQubitGate) => "No 1-qubit gate errors",
        Some(Effect::AlwaysOn) => "No Always-on",
    }
}

/// Mean TVD over the test cases (the training cases when there are no
/// test cases) for the full model and with each effect switched off.
pub fn ablation_report(params: &NoiseParams, problem: &FitProblem) -> Result<Vec<AblationRow>> {
    let cases = if problem.test.is_empty() {
        &problem.train
    } else {
        &problem.test
    };
    ablation_over(params, &problem.device, cases, problem.evaluation)
}

pub fn ablation_over(
    params: &NoiseParams,
    device: &DeviceModel,
    cases: &[Case],
    evaluation: Evaluation,
) -> Result<Vec<AblationRow>> {
    let prepared = prepare(device, cases)?;
    let configs: Vec<Option<Effect>> = std::iter::once(None)
        .chain(Effect::ALL.into_iter().map(Some))
        .collect();
    configs
        .par_iter()
        .map(|&effect| {
            let p = match effect {
                None => params.clone(),
                Some(e) => params.clone().with_toggles(params.toggles.without(e)),
            };
            Ok(AblationRow {
                name: ablation_name(effect),
                effect,
                mean_tvd: mean_tvd(device, &p, &prepared, evaluation)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchmark::benchmark_suite;

    fn cases_at(device: &DeviceModel, params: &NoiseParams, trainable: bool) -> Vec<Case> {
        let em = Emulator::new(device, params.clone());
        benchmark_suite(device)
            .unwrap()
            .into_iter()
            .filter(|s| s.trainable == trainable)
            .map(|s| {
                let circuit = s.circuit(device).unwrap();
                Case {
                    reference: em.distribution(&circuit).unwrap(),
                    label: s.label,
                    circuit,
                }
            })
            .collect()
    }

    fn problem() -> (FitProblem, NoiseParams) {
        let dev = DeviceModel::soprano_d();
        let space = ParameterSpace::standard(&dev, CouplingMode::Shared, 100e6, (0.8, 1.0));
        let truth = space.apply(&[40e6, 0.98, 0.95, 0.93]);
        let problem = FitProblem {
            train: cases_at(&dev, &truth, true),
            test: cases_at(&dev, &truth, false),
            device: dev,
            space,
            evaluation: Evaluation::Exact,
        };
        (problem, truth)
    }

    #[test]
    fn standard_space_has_one_parameter_per_active_qubit() {
        let dev = DeviceModel::soprano_d();
        let s = ParameterSpace::standard(&dev, CouplingMode::Shared, 1e6, (0.8, 1.0));
        assert_eq!(s.names(), vec!["J", "F_cz[0-2]", "F_cz[1-2]", "F_cz[2-3]"]);
        let p = ParameterSpace::standard(&dev, CouplingMode::PerPair, 1e6, (0.8, 1.0));
        assert_eq!(p.free.len(), 6);
        let x = [1.0, 2.0, 3.0, 0.9, 0.91, 0.92];
        assert_eq!(p.vector(&p.apply(&x), &dev).unwrap(), x.to_vec());
    }

    #[test]
    fn self_consistent_cost_is_zero() {
        let (problem, truth) = problem();
        assert!(problem.train_cost(&truth).unwrap() < 1e-9);
        let ideal = truth.clone().with_toggles(crate::transpile::NoiseToggles::all_off());
        assert!(problem.train_cost(&ideal).unwrap() > 1e-3);
    }

    #[test]
    fn cost_ignores_case_order() {
        let (mut problem, truth) = problem();
        let p = problem.space.apply(&[10e6, 0.9, 0.9, 0.9]);
        let a = problem.train_cost(&p).unwrap();
        problem.train.reverse();
        assert_eq!(a, problem.train_cost(&p).unwrap());
        assert!(a > problem.train_cost(&truth).unwrap());
    }

    #[test]
    fn validation_rejects_bad_problems() {
        let (mut problem, _) = problem();
        problem.test.push(problem.train[0].clone());
        assert!(problem.validate().is_err());
        let (mut problem, _) = self::problem();
        problem.space.free[1].hi = 1.05;
        assert!(problem.validate().is_err());
    }

    #[test]
    fn coupling_only_slice_recovers_truth() {
        let (mut problem, _) = problem();
        for (e, f) in [((0, 2), 0.98), ((1, 2), 0.95), ((2, 3), 0.93)] {
            problem.space.freeze(Parameter::CzFidelity(Edge::new(e.0, e.1)), f);
        }
        let cfg = DeConfig {
            generations: 25,
            population: Some(8),
            ..Default::default()
        };
        let r = fit(&problem, &cfg, 3).unwrap();
        assert_eq!(r.parameter_names, vec!["J"]);
        assert!((r.best_vector[0] / 40e6 - 1.0).abs() < 0.02, "{:?}", r.best_vector);
        assert!(r.history.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn ablation_full_row_matches_test_cost() {
        let (problem, truth) = problem();
        let rows = ablation_report(&truth, &problem).unwrap();
        assert_eq!(rows.len(), 6);
        assert_eq!(rows[0].name, "Full model");
        assert_eq!(rows[0].mean_tvd, problem.test_cost(&truth).unwrap().unwrap());
        for r in &rows[1..] {
            assert!(r.mean_tvd >= rows[0].mean_tvd);
        }
    }
}

//! Command-line interface: `emulate`, `fit` and `report`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::benchmark::benchmark_suite;
use crate::circuit::Circuit;
use crate::device::{DeviceModel, Edge};
use crate::distribution::{derive_seed, tvd, DistributionRecord};
use crate::emulator::Emulator;
use crate::error::{Error, Result};
use crate::fit::{ablation_report, fit, Case, CouplingMode, DeConfig, Evaluation, FitProblem, Parameter, ParameterSpace};
use crate::report::{
    ablation_csv, cluster_cases, fit_result_json, load_clusters, load_params, parameter_table,
    tvd_csv, tvd_json, tvd_over_time, write_file,
};
use crate::transpile::{Effect, NoiseParams, NoiseToggles};

/// Directory searched for `device.toml` and fit configs.
pub const CONFIG_DIR_ENV: &str = "TRANSMON_TWIN_CONFIG_DIR";

#[derive(Debug, Parser)]
#[command(name = "transmon-twin", version, about = "Noise-model emulator for small transmon devices")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Emulate circuits and write exact and sampled distributions.
    Emulate(EmulateArgs),
    /// Fit noise parameters to reference distributions.
    Fit(FitArgs),
    /// Mean TVD per reference cluster under each ablation.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct EmulateArgs {
    /// Device calibration file [default: $TRANSMON_TWIN_CONFIG_DIR/device.toml, else the bundled device]
    #[arg(long)]
    pub device: Option<PathBuf>,
    /// Circuit file; repeatable.
    #[arg(long = "circuit")]
    pub circuits: Vec<PathBuf>,
    /// Add the eight benchmark circuits.
    #[arg(long)]
    pub suite: bool,
    /// Noise parameters (TOML, or a fit_result.json) [default: device calibration]
    #[arg(long)]
    pub params: Option<PathBuf>,
    /// Effects to switch off: passive, spam, 2q, 1q, always_on.
    #[arg(long, value_delimiter = ',')]
    pub disable: Vec<String>,
    /// Shots per circuit; 0 writes exact distributions only.
    #[arg(long, default_value_t = 100_000)]
    pub shots: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Time stamp stored with the sampled distributions, h.
    #[arg(long)]
    pub hours: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Fit configuration (TOML).
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory [default: `out` from the config]
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Overrides the seed of the config.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Directory of reference clusters.
    #[arg(long)]
    pub references: PathBuf,
    /// Fitted model: fit_result.json or a parameter TOML.
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub device: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

fn config_dir() -> Option<PathBuf> {
    std::env::var_os(CONFIG_DIR_ENV).map(PathBuf::from)
}

fn load_device(path: Option<&Path>) -> Result<DeviceModel> {
    if let Some(p) = path {
        return DeviceModel::load(p);
    }
    match config_dir().map(|d| d.join("device.toml")) {
        Some(p) if p.is_file() => DeviceModel::load(p),
        _ => Ok(DeviceModel::soprano_d()),
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })
}

fn parse_toggles(base: NoiseToggles, disable: &[String]) -> Result<NoiseToggles> {
    disable.iter().try_fold(base, |t, name| {
        Effect::from_name(name.trim())
            .map(|e| t.without(e))
            .ok_or_else(|| {
                Error::validation(format!(
                    "unknown effect `{name}`, expected one of passive, spam, 2q, 1q, always_on"
                ))
            })
    })
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Emulate(a) => cmd_emulate(&a),
        Command::Fit(a) => cmd_fit(&a),
        Command::Report(a) => cmd_report(&a),
    }
}

#[derive(Serialize)]
struct EmulateSummary<'a> {
    device: &'a str,
    device_fingerprint: String,
    params: &'a NoiseParams,
    seed: u64,
    shots: u64,
    hours: Option<f64>,
    circuits: Vec<CircuitSummary>,
}

#[derive(Serialize)]
struct CircuitSummary {
    label: String,
    seed: u64,
    tvd_exact_vs_ideal: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    tvd_sampled_vs_ideal: Option<f64>,
}

pub fn cmd_emulate(a: &EmulateArgs) -> Result<()> {
    let device = load_device(a.device.as_deref())?;
    let mut params = match &a.params {
        Some(p) => load_params(p)?,
        None => NoiseParams::from_device(&device),
    };
    params.toggles = parse_toggles(params.toggles, &a.disable)?;

    let mut circuits: Vec<(Circuit, bool)> = Vec::new();
    for path in &a.circuits {
        circuits.push((Circuit::load(path)?, true));
    }
    if a.suite {
        for spec in benchmark_suite(&device)? {
            circuits.push((spec.circuit(&device)?, false));
        }
    }
    if circuits.is_empty() {
        return Err(Error::validation("nothing to emulate: pass --circuit or --suite"));
    }
    let mut seen = std::collections::BTreeSet::new();
    if let Some((c, _)) = circuits.iter().find(|(c, _)| !seen.insert(c.name.clone())) {
        return Err(Error::validation(format!("two circuits are named `{}`", c.name)));
    }

    let noisy = Emulator::new(&device, params.clone());
    let ideal = Emulator::ideal(&device);
    struct Output {
        label: String,
        circuit_text: Option<String>,
        schedule: String,
        exact: DistributionRecord,
        sampled: Option<DistributionRecord>,
        summary: CircuitSummary,
    }
    let outputs = circuits
        .par_iter()
        .enumerate()
        .map(|(i, (circuit, from_file))| -> Result<Output> {
            let e = noisy.emulate(circuit)?;
            let target = ideal.distribution(circuit)?;
            let seed = derive_seed(a.seed, i);
            let sampled = if a.shots > 0 {
                Some(e.distribution.sample(a.shots, seed)?)
            } else {
                None
            };
            let summary = CircuitSummary {
                label: circuit.name.clone(),
                seed,
                tvd_exact_vs_ideal: tvd(&e.distribution, &target)?,
                tvd_sampled_vs_ideal: sampled.as_ref().map(|s| tvd(s, &target)).transpose()?,
            };
            Ok(Output {
                label: circuit.name.clone(),
                circuit_text: from_file.then(|| circuit.to_text()),
                schedule: e.noisy.to_string(),
                exact: DistributionRecord {
                    circuit: circuit.name.clone(),
                    seed: None,
                    hours: a.hours,
                    distribution: e.distribution,
                },
                sampled: sampled.map(|d| DistributionRecord {
                    circuit: circuit.name.clone(),
                    seed: Some(seed),
                    hours: a.hours,
                    distribution: d,
                }),
                summary,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    create_dir(&a.out)?;
    let mut summaries = Vec::with_capacity(outputs.len());
    for o in outputs {
        if let Some(text) = &o.circuit_text {
            write_file(&a.out.join(format!("{}.circ", o.label)), text)?;
        }
        write_file(&a.out.join(format!("{}.schedule.txt", o.label)), &o.schedule)?;
        match &o.sampled {
            Some(s) => {
                o.exact.save(a.out.join(format!("{}.exact.json", o.label)))?;
                s.save(a.out.join(format!("{}.json", o.label)))?;
            }
            None => o.exact.save(a.out.join(format!("{}.json", o.label)))?,
        }
        println!(
            "{:<16} tvd vs ideal {:.6}",
            o.label, o.summary.tvd_exact_vs_ideal
        );
        summaries.push(o.summary);
    }
    let summary = EmulateSummary {
        device: &device.name,
        device_fingerprint: device.fingerprint(),
        params: &params,
        seed: a.seed,
        shots: a.shots,
        hours: a.hours,
        circuits: summaries,
    };
    let mut text = serde_json::to_string_pretty(&summary).expect("summary serializes");
    text.push('\n');
    write_file(&a.out.join("summary.json"), &text)
}

/// Fit configuration file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitConfig {
    #[serde(default)]
    pub device: Option<PathBuf>,
    pub references: PathBuf,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
    /// Share of reference clusters used for training.
    #[serde(default = "default_train_fraction")]
    pub train_fraction: f64,
    /// Only circuits on at most this many qubits are used for training.
    #[serde(default = "default_train_max_qubits")]
    pub train_max_qubits: usize,
    #[serde(default)]
    pub coupling_mode: CouplingModeName,
    #[serde(default)]
    pub evaluation: EvaluationConfig,
    #[serde(default)]
    pub bounds: BoundsConfig,
    #[serde(default)]
    pub de: DeConfig,
    #[serde(default)]
    pub fixed: FixedConfig,
    #[serde(default)]
    pub toggles: NoiseToggles,
}

fn default_train_fraction() -> f64 {
    0.125
}

fn default_train_max_qubits() -> usize {
    3
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CouplingModeName {
    #[default]
    Shared,
    PerPair,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluationConfig {
    /// Shots per emulated circuit; exact probabilities when absent.
    #[serde(default)]
    pub shots: Option<u64>,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoundsConfig {
    pub j_max_khz: f64,
    pub cz_fidelity: (f64, f64),
}

impl Default for BoundsConfig {
    fn default() -> Self {
        BoundsConfig {
            j_max_khz: 100_000.0,
            cz_fidelity: (0.8, 1.0),
        }
    }
}

/// Parameters held fixed instead of fitted.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FixedConfig {
    pub coupling_khz: Option<f64>,
    pub cz_fidelity: BTreeMap<String, f64>,
}

impl FitConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut cfg: FitConfig =
            toml::from_str(&text).map_err(|e| Error::parse(path.display().to_string(), e.to_string()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        resolve(&mut cfg.references);
        if let Some(d) = cfg.device.as_mut() {
            resolve(d);
        }
        if let Some(o) = cfg.out.as_mut() {
            resolve(o);
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.train_fraction > 0.0 && self.train_fraction <= 1.0) {
            return Err(Error::validation(format!(
                "train_fraction {} outside (0, 1]",
                self.train_fraction
            )));
        }
        if self.evaluation.shots == Some(0) {
            return Err(Error::validation("evaluation shots must be at least 1"));
        }
        if !(self.bounds.j_max_khz.is_finite() && self.bounds.j_max_khz > 0.0) {
            return Err(Error::validation("j_max_khz must be positive"));
        }
        Ok(())
    }

    pub fn parameter_space(&self, device: &DeviceModel) -> Result<ParameterSpace> {
        let mode = match self.coupling_mode {
            CouplingModeName::Shared => CouplingMode::Shared,
            CouplingModeName::PerPair => CouplingMode::PerPair,
        };
        let mut space = ParameterSpace::standard(device, mode, self.bounds.j_max_khz * 1e3, self.bounds.cz_fidelity);
        space.base.toggles = self.toggles;
        if let Some(j) = self.fixed.coupling_khz {
            if mode == CouplingMode::PerPair {
                for e in crate::fit::active_edges(device) {
                    space.freeze(Parameter::Coupling(e), j * 1e3);
                }
            } else {
                space.freeze(Parameter::SharedCoupling, j * 1e3);
            }
        }
        for (k, &f) in &self.fixed.cz_fidelity {
            let e: Edge = k.parse()?;
            space.freeze(Parameter::CzFidelity(e), f);
        }
        space.validate()?;
        Ok(space)
    }

    pub fn evaluation(&self) -> Evaluation {
        match self.evaluation.shots {
            Some(shots) => Evaluation::Sampled {
                shots,
                seed: self.evaluation.seed,
            },
            None => Evaluation::Exact,
        }
    }
}

/// Training and test cases with the clusters they came from.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Split {
    pub train_fraction: f64,
    pub train_max_qubits: usize,
    pub clusters: Vec<String>,
    pub train_clusters: Vec<String>,
    pub train: Vec<String>,
    pub test: Vec<String>,
    /// Share of all reference distributions used for training.
    pub train_share: f64,
}

/// The earliest `ceil(fraction · clusters)` clusters train, using only
/// their circuits on at most `max_qubits` qubits. Everything else tests.
pub fn split_cases(
    clusters: &[(String, Vec<Case>)],
    fraction: f64,
    max_qubits: usize,
) -> (Vec<Case>, Vec<Case>, Split) {
    let n_train = ((fraction * clusters.len() as f64) - 1e-9).ceil().max(1.0) as usize;
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for (i, (_, cases)) in clusters.iter().enumerate() {
        for c in cases {
            if i < n_train && c.circuit.measured().len() <= max_qubits {
                train.push(c.clone());
            } else {
                test.push(c.clone());
            }
        }
    }
    let total = train.len() + test.len();
    let split = Split {
        train_fraction: fraction,
        train_max_qubits: max_qubits,
        clusters: clusters.iter().map(|(n, _)| n.clone()).collect(),
        train_clusters: clusters.iter().take(n_train).map(|(n, _)| n.clone()).collect(),
        train: train.iter().map(|c| c.label.clone()).collect(),
        test: test.iter().map(|c| c.label.clone()).collect(),
        train_share: train.len() as f64 / total.max(1) as f64,
    };
    (train, test, split)
}

fn find_config(path: &Path) -> PathBuf {
    if path.is_relative() && !path.exists() {
        if let Some(dir) = config_dir() {
            let candidate = dir.join(path);
            if candidate.exists() {
                return candidate;
            }
        }
    }
    path.to_path_buf()
}

pub fn cmd_fit(a: &FitArgs) -> Result<()> {
    let mut cfg = FitConfig::load(&find_config(&a.config))?;
    if let Some(seed) = a.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    let out = a
        .out
        .clone()
        .or_else(|| cfg.out.clone())
        .ok_or_else(|| Error::validation("no output directory: pass --out or set `out`"))?;
    let device = load_device(cfg.device.as_deref())?;
    let space = cfg.parameter_space(&device)?;

    let clusters = load_clusters(&cfg.references)?;
    let cases = clusters
        .iter()
        .map(|c| Ok((c.name.clone(), cluster_cases(c, &device)?)))
        .collect::<Result<Vec<_>>>()?;
    let (train, test, split) = split_cases(&cases, cfg.train_fraction, cfg.train_max_qubits);
    let problem = FitProblem {
        device,
        train,
        test,
        space,
        evaluation: cfg.evaluation(),
    };
    let result = fit(&problem, &cfg.de, cfg.seed)?;
    let ablation = ablation_report(&result.best_params, &problem)?;

    create_dir(&out)?;
    let mut split_text = serde_json::to_string_pretty(&split).expect("split serializes");
    split_text.push('\n');
    write_file(&out.join("split.json"), &split_text)?;
    write_file(&out.join("fit_result.json"), &fit_result_json(&problem.device, &result))?;
    write_file(&out.join("parameters.txt"), &parameter_table(&problem.device, &result.best_params))?;
    write_file(&out.join("ablation.csv"), &ablation_csv(&ablation))?;

    println!(
        "train {} / test {} distributions ({:.1}% training)",
        split.train.len(),
        split.test.len(),
        100.0 * split.train_share
    );
    for (n, v) in result.parameter_names.iter().zip(&result.best_vector) {
        println!("{n:<12} {v}");
    }
    println!("train TVD {:.6}", result.train_cost);
    if let Some(t) = result.test_cost {
        println!("test TVD  {t:.6}");
    }
    Ok(())
}

pub fn cmd_report(a: &ReportArgs) -> Result<()> {
    let device = load_device(a.device.as_deref())?;
    let params = load_params(&a.model)?;
    let clusters = load_clusters(&a.references)?;
    let rows = tvd_over_time(&clusters, &device, &params, Evaluation::Exact)?;
    create_dir(&a.out)?;
    write_file(&a.out.join("tvd_over_time.csv"), &tvd_csv(&rows))?;
    write_file(&a.out.join("tvd_over_time.json"), &tvd_json(&device, &params, &rows))?;
    for r in &rows {
        println!(
            "{:<16} {}/{} circuits  full-model TVD {:.6}",
            r.cluster, r.present, r.expected, r.rows[0].mean_tvd
        );
    }
    Ok(())
}

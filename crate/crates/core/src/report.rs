//! Reference clusters on disk and the text and table outputs of fits and
//! drift reports.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use crate::benchmark::benchmark_suite;
use crate::circuit::Circuit;
use crate::device::DeviceModel;
use crate::distribution::DistributionRecord;
use crate::error::{Error, Result};
use crate::fit::{ablation_name, ablation_over, active_edges, AblationRow, Case, Evaluation, FitResult};
use crate::transpile::{Coupling, Effect, NoiseParams};

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(io_err(path))
}

/// Reference distributions taken together at one point in time.
#[derive(Debug, Clone, PartialEq)]
pub struct Cluster {
    pub name: String,
    pub dir: PathBuf,
    /// Earliest `hours` stamp among the records.
    pub hours: Option<f64>,
    pub records: Vec<DistributionRecord>,
}

fn json_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(io_err(dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.is_file()
                && p.extension().is_some_and(|x| x == "json")
                && !p.file_name().is_some_and(|n| {
                    let n = n.to_string_lossy();
                    n.ends_with(".exact.json") || n == "summary.json"
                })
        })
        .collect();
    files.sort();
    Ok(files)
}

fn load_cluster(name: String, dir: &Path) -> Result<Cluster> {
    let records = json_files(dir)?
        .iter()
        .map(DistributionRecord::load)
        .collect::<Result<Vec<_>>>()?;
    let hours = records
        .iter()
        .filter_map(|r| r.hours)
        .min_by(f64::total_cmp);
    Ok(Cluster {
        name,
        dir: dir.to_path_buf(),
        hours,
        records,
    })
}

/// Loads every cluster below `dir`: each subdirectory with reference files
/// is a cluster, or `dir` itself when it holds reference files directly.
/// Clusters are ordered by time stamp, then name.
pub fn load_clusters(dir: &Path) -> Result<Vec<Cluster>> {
    let mut clusters = Vec::new();
    if !json_files(dir)?.is_empty() {
        let name = dir
            .file_name()
            .map_or_else(|| ".".to_string(), |n| n.to_string_lossy().into_owned());
        clusters.push(load_cluster(name, dir)?);
    }
    let mut subdirs: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(io_err(dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    subdirs.sort();
    for sub in subdirs {
        if json_files(&sub)?.is_empty() {
            continue;
        }
        let name = sub.file_name().unwrap().to_string_lossy().into_owned();
        clusters.push(load_cluster(name, &sub)?);
    }
    if clusters.is_empty() {
        return Err(Error::validation(format!(
            "no reference distributions under {}",
            dir.display()
        )));
    }
    clusters.sort_by(|a, b| {
        a.hours
            .unwrap_or(f64::INFINITY)
            .total_cmp(&b.hours.unwrap_or(f64::INFINITY))
            .then_with(|| a.name.cmp(&b.name))
    });
    Ok(clusters)
}

/// Circuit for a reference label: a benchmark of the device suite, or a
/// `<label>.circ` file beside the reference.
pub fn resolve_circuit(label: &str, dir: &Path, device: &DeviceModel) -> Result<Circuit> {
    let path = dir.join(format!("{label}.circ"));
    if path.is_file() {
        let mut c = Circuit::load(&path)?;
        c.name = label.to_string();
        return Ok(c);
    }
    if let Some(spec) = benchmark_suite(device)
        .ok()
        .and_then(|s| s.into_iter().find(|s| s.label == label))
    {
        return spec.circuit(device);
    }
    Err(Error::validation(format!(
        "no circuit for reference `{label}`: not a benchmark and {} does not exist",
        path.display()
    )))
}

/// The cases of a cluster, with labels prefixed by the cluster name.
pub fn cluster_cases(cluster: &Cluster, device: &DeviceModel) -> Result<Vec<Case>> {
    cluster
        .records
        .iter()
        .map(|r| {
            let circuit = resolve_circuit(&r.circuit, &cluster.dir, device)?;
            if circuit.measured().len() != r.distribution.width() {
                return Err(Error::in_circuit(
                    &r.circuit,
                    Error::WidthMismatch(circuit.measured().len(), r.distribution.width()),
                ));
            }
            Ok(Case {
                label: format!("{}/{}", cluster.name, r.circuit),
                circuit,
                reference: r.distribution.clone(),
            })
        })
        .collect()
}

fn fmt_khz(j: f64) -> String {
    format!("{:.3}", j / 1e3)
}

/// Calibration and fitted parameters laid out like a device table: one
/// column per qubit, then one column per active coupler.
pub fn parameter_table(device: &DeviceModel, params: &NoiseParams) -> String {
    let mut out = String::new();
    let qs: Vec<_> = device.active_qubits.iter().filter_map(|&q| device.qubit(q).ok()).collect();
    let row = |out: &mut String, name: &str, cells: Vec<String>| {
        let _ = write!(out, "{name:<34}");
        for c in cells {
            let _ = write!(out, "{c:>12}");
        }
        out.push('\n');
    };
    row(&mut out, "Qubit", qs.iter().map(|q| format!("q{}", q.index)).collect());
    row(&mut out, "Frequency [GHz]", qs.iter().map(|q| format!("{:.4}", q.frequency / 1e9)).collect());
    row(&mut out, "Anharmonicity [MHz]", qs.iter().map(|q| format!("{:.1}", q.anharmonicity / 1e6)).collect());
    row(&mut out, "T1 [us]", qs.iter().map(|q| format!("{:.2}", q.t1 * 1e6)).collect());
    row(&mut out, "T2 [us]", qs.iter().map(|q| format!("{:.2}", q.t2 * 1e6)).collect());
    row(&mut out, "Excited population", qs.iter().map(|q| format!("{:.4}", q.p_excited)).collect());
    row(&mut out, "P(1|0)", qs.iter().map(|q| format!("{:.4}", q.confusion.p(1, 0))).collect());
    row(&mut out, "P(0|1)", qs.iter().map(|q| format!("{:.4}", q.confusion.p(0, 1))).collect());
    row(&mut out, "1-qubit gate fidelity", qs.iter().map(|q| format!("{:.4}", q.single_qubit_fidelity)).collect());
    out.push('\n');
    let edges = active_edges(device);
    row(&mut out, "Pair", edges.iter().map(|e| e.to_string()).collect());
    row(
        &mut out,
        "CZ fidelity",
        edges
            .iter()
            .map(|&e| params.cz_fidelity_for(e, device).map_or("-".into(), |f| format!("{f:.4}")))
            .collect(),
    );
    let label = match params.coupling {
        Coupling::Shared(_) => "Coupling J, shared [kHz]",
        Coupling::PerPair(_) => "Coupling J [kHz]",
    };
    row(
        &mut out,
        label,
        edges
            .iter()
            .map(|&e| params.coupling_for(e, device).map_or("-".into(), fmt_khz))
            .collect(),
    );
    row(
        &mut out,
        "ZZ rate [rad/s]",
        edges
            .iter()
            .map(|&e| {
                params
                    .coupling_for(e, device)
                    .and_then(|j| device.beta_with_coupling(e, j))
                    .map_or("-".into(), |b| format!("{b:.4e}"))
            })
            .collect(),
    );
    out
}

pub fn ablation_csv(rows: &[AblationRow]) -> String {
    let mut out = String::from("configuration,mean_tvd\n");
    for r in rows {
        let _ = writeln!(out, "{},{}", r.name, r.mean_tvd);
    }
    out
}

#[derive(Serialize)]
struct FitRecord<'a> {
    device: &'a str,
    device_fingerprint: String,
    seed: u64,
    parameters: BTreeMap<&'a str, f64>,
    params: &'a NoiseParams,
    train_cost: f64,
    test_cost: Option<f64>,
    evaluations: usize,
    history: &'a [f64],
}

pub fn fit_result_json(device: &DeviceModel, result: &FitResult) -> String {
    let record = FitRecord {
        device: &device.name,
        device_fingerprint: device.fingerprint(),
        seed: result.seed,
        parameters: result
            .parameter_names
            .iter()
            .map(String::as_str)
            .zip(result.best_vector.iter().copied())
            .collect(),
        params: &result.best_params,
        train_cost: result.train_cost,
        test_cost: result.test_cost,
        evaluations: result.evaluations,
        history: &result.history,
    };
    let mut s = serde_json::to_string_pretty(&record).expect("fit record serializes");
    s.push('\n');
    s
}

/// Reads the noise parameters of a fit result, or a parameter TOML file.
pub fn load_params(path: &Path) -> Result<NoiseParams> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    let origin = path.display().to_string();
    if path.extension().is_some_and(|x| x == "toml") {
        return NoiseParams::from_toml_str(&text, &origin);
    }
    #[derive(serde::Deserialize)]
    struct WithParams {
        params: NoiseParams,
    }
    serde_json::from_str::<WithParams>(&text)
        .map(|w| w.params)
        .map_err(|e| Error::parse(origin, e.to_string()))
}

/// Mean TVD of one cluster under every ablation configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct TvdRow {
    pub cluster: String,
    pub hours: Option<f64>,
    pub present: usize,
    pub expected: usize,
    pub rows: Vec<AblationRow>,
}

impl TvdRow {
    pub fn complete(&self) -> bool {
        self.present == self.expected
    }
}

/// TVD over time: one row per cluster. Clusters missing some of the
/// circuits seen in other clusters are kept and marked incomplete.
pub fn tvd_over_time(
    clusters: &[Cluster],
    device: &DeviceModel,
    params: &NoiseParams,
    evaluation: Evaluation,
) -> Result<Vec<TvdRow>> {
    let expected: BTreeSet<&str> = clusters
        .iter()
        .flat_map(|c| c.records.iter().map(|r| r.circuit.as_str()))
        .collect();
    clusters
        .par_iter()
        .map(|cluster| {
            let cases = cluster_cases(cluster, device)?;
            Ok(TvdRow {
                cluster: cluster.name.clone(),
                hours: cluster.hours,
                present: cases.len(),
                expected: expected.len(),
                rows: ablation_over(params, device, &cases, evaluation)?,
            })
        })
        .collect()
}

pub fn tvd_csv(rows: &[TvdRow]) -> String {
    let configs: Vec<Option<Effect>> = std::iter::once(None)
        .chain(Effect::ALL.into_iter().map(Some))
        .collect();
    let mut out = String::from("cluster,hours,circuits,complete");
    for &c in &configs {
        let _ = write!(out, ",{}", ablation_name(c));
    }
    out.push('\n');
    for r in rows {
        let hours = r.hours.map_or(String::new(), |h| h.to_string());
        let _ = write!(
            out,
            "{},{hours},{}/{},{}",
            r.cluster,
            r.present,
            r.expected,
            if r.complete() { "yes" } else { "no" }
        );
        for a in &r.rows {
            let _ = write!(out, ",{}", a.mean_tvd);
        }
        out.push('\n');
    }
    out
}

#[derive(Serialize)]
struct TvdRecord<'a> {
    device: &'a str,
    device_fingerprint: String,
    params: &'a NoiseParams,
    clusters: Vec<TvdClusterRecord<'a>>,
}

#[derive(Serialize)]
struct TvdClusterRecord<'a> {
    cluster: &'a str,
    hours: Option<f64>,
    circuits: usize,
    expected: usize,
    complete: bool,
    mean_tvd: BTreeMap<&'static str, f64>,
}

pub fn tvd_json(device: &DeviceModel, params: &NoiseParams, rows: &[TvdRow]) -> String {
    let record = TvdRecord {
        device: &device.name,
        device_fingerprint: device.fingerprint(),
        params,
        clusters: rows
            .iter()
            .map(|r| TvdClusterRecord {
                cluster: &r.cluster,
                hours: r.hours,
                circuits: r.present,
                expected: r.expected,
                complete: r.complete(),
                mean_tvd: r.rows.iter().map(|a| (a.name, a.mean_tvd)).collect(),
            })
            .collect(),
    };
    let mut s = serde_json::to_string_pretty(&record).expect("report serializes");
    s.push('\n');
    s
}

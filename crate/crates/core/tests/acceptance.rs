//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

mod common;

use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{c, hermitian_eigenvalues, max_abs_diff, random_density, superoperator_chain, trace_distance};
use transmon_twin::benchmark::benchmark_suite;
use transmon_twin::channels::{
    decay_channel, deph, deph2, delta1_from_fidelity, delta2_from_fidelity, gamp, CMatrix,
    ConfusionMatrix, QuantumChannel,
};
use transmon_twin::device::DurationKind;
use transmon_twin::distribution::DistributionRecord;
use transmon_twin::emulator::simulate;
use transmon_twin::fit::{CouplingMode, ParameterSpace};
use transmon_twin::schedule::schedule_alap;
use transmon_twin::transpile::{transpile_noise, ChannelSpec, Coupling, Effect, NoiseToggles, NoisyOp};
use transmon_twin::{tvd, Circuit, DeviceModel, Edge, Emulator, Gate, NoiseParams};

const COMPLETENESS_TOL: f64 = 1e-12;
const PHYSICALITY_TOL: f64 = 1e-12;
const STATES_PER_ARITY: usize = 100;
const RESET_TOL: f64 = 1e-10;
const LONG_DECAY_TOL: f64 = 1e-9;
const IDEAL_TVD_TOL: f64 = 1e-9;
const ORACLE_TOL: f64 = 1e-9;
const ORACLE_CIRCUITS: usize = 25;
const FIDELITY_TOL: f64 = 0.005;
const COUPLING_REL_TOL: f64 = 0.15;
const TRAIN_COST_MAX: f64 = 0.01;
const TRUE_COUPLING_HZ: f64 = 40e6;
const TRUE_CZ_FIDELITY: [f64; 3] = [0.987, 0.964, 0.917];
const FIT_SEED: u64 = 7;
const REFERENCE_SHOTS: u64 = 100_000;

type Check = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn check_physical(label: &str, rho: &CMatrix) -> Result<(), String> {
    let tr = rho.trace();
    ensure((tr - c(1.0)).norm() <= PHYSICALITY_TOL, || format!("{label}: trace {tr}"))?;
    let herm = max_abs_diff(rho, &rho.adjoint());
    ensure(herm <= PHYSICALITY_TOL, || format!("{label}: hermiticity error {herm:e}"))?;
    let min = hermitian_eigenvalues(rho).min();
    ensure(min >= -PHYSICALITY_TOL, || format!("{label}: eigenvalue {min:e}"))
}

fn tensor(a: &QuantumChannel, b: &QuantumChannel) -> QuantumChannel {
    let kraus = a
        .kraus()
        .iter()
        .flat_map(|x| b.kraus().iter().map(move |y| x.kronecker(y)))
        .collect();
    QuantumChannel::new(2, kraus, format!("{}⊗{}", a.label(), b.label())).unwrap()
}

fn criterion_1() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut one = Vec::new();
    let mut two = Vec::new();
    for _ in 0..5 {
        let g = gamp(rng.random(), rng.random()).unwrap();
        let d = deph(0.5 * rng.random::<f64>()).unwrap();
        let t1 = rng.random_range(5e-6..100e-6);
        let t2 = rng.random_range(1e-6..2.0 * t1);
        let e = decay_channel(t1, t2, 0.1 * rng.random::<f64>(), rng.random_range(0.0..5e-6)).unwrap();
        let d2 = deph2(0.75 * rng.random::<f64>()).unwrap();
        one.push(g.then(&d, "gamp·deph").unwrap());
        one.push(e.then(&g, "decay·gamp").unwrap());
        two.push(d2.then(&tensor(&e, &g), "deph2·(decay⊗gamp)").unwrap());
        two.push(tensor(&d, &e));
        one.extend([g, d, e]);
        two.push(d2);
    }
    one.push(gamp(1.0, 0.05).unwrap());
    one.push(gamp(0.0, 0.0).unwrap());
    one.push(deph(0.5).unwrap());
    two.push(deph2(0.75).unwrap());

    let mut worst: f64 = 0.0;
    for (arity, channels) in [(1, &one), (2, &two)] {
        for ch in channels.iter() {
            let err = ch.completeness_error();
            worst = worst.max(err);
            ensure(err <= COMPLETENESS_TOL, || format!("{}: completeness {err:e}", ch.label()))?;
        }
        for _ in 0..STATES_PER_ARITY {
            let rho = random_density(arity, &mut rng);
            for ch in channels.iter() {
                check_physical(ch.label(), &ch.apply_to(&rho))?;
            }
        }
    }
    Ok(format!(
        "{} channels, {STATES_PER_ARITY} states per arity, completeness error <= {worst:.1e}",
        one.len() + two.len()
    ))
}

fn thermal(p: f64) -> CMatrix {
    DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(1.0 - p), c(p)]))
}

fn criterion_2() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let dev = DeviceModel::soprano_d();
    let mut worst_reset: f64 = 0.0;
    let mut worst_decay: f64 = 0.0;
    for i in 0..20 {
        let q = dev.qubit(i % dev.num_qubits()).unwrap();
        let p = if i < 10 { q.p_excited } else { rng.random() };
        let rho = random_density(1, &mut rng);
        let target = thermal(p);

        let reset = gamp(1.0, p).unwrap().apply_to(&rho);
        worst_reset = worst_reset.max(trace_distance(&reset, &target));

        let long = decay_channel(q.t1, q.t2, p, 100.0 * q.t1).unwrap().apply_to(&rho);
        worst_decay = worst_decay.max(trace_distance(&long, &target));
    }
    ensure(worst_reset <= RESET_TOL, || format!("reset trace distance {worst_reset:e}"))?;
    ensure(worst_decay <= LONG_DECAY_TOL, || format!("decay trace distance {worst_decay:e}"))?;
    Ok(format!(
        "reset {worst_reset:.1e}, decay(100 T1) {worst_decay:.1e} trace distance"
    ))
}

fn criterion_3() -> Check {
    let dev = DeviceModel::soprano_d();
    let params = NoiseParams::from_device(&dev);
    let mut circuit = Circuit::new("single_layer", 5);
    circuit.push(Gate::rx(1, std::f64::consts::FRAC_PI_2)).unwrap();
    circuit.push(Gate::cz(2, 3)).unwrap();
    let scheduled = schedule_alap(&circuit, &dev).map_err(|e| e.to_string())?;
    let noisy = transpile_noise(&scheduled, &dev, &params).map_err(|e| e.to_string())?;
    ensure(noisy.layers.len() == 1, || format!("{} layers", noisy.layers.len()))?;

    #[derive(Debug, PartialEq)]
    enum Expected {
        Gate(&'static str, Vec<usize>),
        Deph(usize, f64),
        Deph2([usize; 2], f64),
        Decay(usize, f64),
        Crosstalk(Edge, f64, f64),
    }
    let ns = 1e-9;
    let d1 = delta1_from_fidelity(dev.qubit(1).unwrap().single_qubit_fidelity).unwrap();
    let d2 = delta2_from_fidelity(params.cz_fidelity_for(Edge::new(2, 3), &dev).unwrap()).unwrap();
    let cz = dev.duration(DurationKind::Cz).unwrap();
    let rx = dev.duration(DurationKind::Rx).unwrap();
    let mut expected = vec![
        Expected::Gate("rx", vec![1]),
        Expected::Deph(1, d1),
        Expected::Gate("cz", vec![2, 3]),
        Expected::Deph2([2, 3], d2),
        Expected::Decay(0, 45.0 * ns),
        Expected::Decay(1, 13.0 * ns),
        Expected::Decay(4, 45.0 * ns),
    ];
    for (a, b) in [(0, 2), (1, 2), (2, 3), (2, 4)] {
        let e = Edge::new(a, b);
        expected.push(Expected::Crosstalk(e, dev.beta(e).unwrap(), 45.0 * ns));
    }
    ensure((cz - 45.0 * ns).abs() < 1e-15 && (cz - rx - 13.0 * ns).abs() < 1e-15, || {
        format!("durations cz {cz} rx {rx}")
    })?;

    let got: Vec<Expected> = noisy.layers[0]
        .ops
        .iter()
        .map(|op| match op {
            NoisyOp::Gate { gate, .. } => Expected::Gate(gate.kind.name(), gate.qubits.clone()),
            NoisyOp::Channel { qubits, spec, .. } => match *spec {
                ChannelSpec::Deph { delta } => Expected::Deph(qubits[0], delta),
                ChannelSpec::Deph2 { delta } => Expected::Deph2([qubits[0], qubits[1]], delta),
                ChannelSpec::Decay { duration, .. } => {
                    Expected::Decay(qubits[0], (duration / ns).round() * ns)
                }
                ChannelSpec::Reset { .. } => Expected::Gate("reset", qubits.clone()),
            },
            NoisyOp::Crosstalk { edge, beta, duration } => {
                Expected::Crosstalk(*edge, *beta, (duration / ns).round() * ns)
            }
        })
        .collect();
    ensure(got == expected, || format!("instruction list differs:\n{got:#?}"))?;
    Ok(format!("{} instructions match", expected.len()))
}

fn ideal_device() -> DeviceModel {
    let mut dev = DeviceModel::soprano_d();
    for q in &mut dev.qubits {
        q.t1 = f64::INFINITY;
        q.t2 = f64::INFINITY;
        q.p_excited = 0.0;
        q.confusion = ConfusionMatrix::identity();
        q.single_qubit_fidelity = 1.0;
    }
    for cp in &mut dev.couplings {
        cp.coupling_j = 0.0;
        cp.cz_fidelity = Some(1.0);
    }
    dev
}

/// Exact outcome records of the suite in the ideal limit, serialized.
fn ideal_limit_records() -> Result<(f64, Vec<String>), String> {
    let dev = ideal_device();
    let params = NoiseParams::from_device(&dev).with_toggles(NoiseToggles::all_on());
    let emulator = Emulator::new(&dev, params);
    let mut worst: f64 = 0.0;
    let mut records = Vec::new();
    for spec in benchmark_suite(&dev).map_err(|e| e.to_string())? {
        let circuit = spec.circuit(&dev).map_err(|e| e.to_string())?;
        let d = emulator.distribution(&circuit).map_err(|e| e.to_string())?;
        let t = tvd(&d, &spec.ideal_distribution()).map_err(|e| e.to_string())?;
        ensure(t <= IDEAL_TVD_TOL, || format!("{}: tvd {t:e}", spec.label))?;
        worst = worst.max(t);
        records.push(
            DistributionRecord {
                circuit: spec.label.clone(),
                seed: None,
                hours: None,
                distribution: d,
            }
            .to_json(),
        );
    }
    ensure(records.len() == 8, || format!("{} circuits", records.len()))?;
    Ok((worst, records))
}

fn criterion_4() -> Check {
    let dev = ideal_device();
    let ghz4 = benchmark_suite(&dev)
        .unwrap()
        .into_iter()
        .find(|s| s.qubits.len() == 4 && s.label.starts_with("ghz"))
        .ok_or("no GHZ-4 circuit")?;
    let p = ghz4.ideal_distribution();
    ensure(p.probability("0000") == 0.5 && p.probability("1111") == 0.5, || {
        "GHZ-4 ideal distribution".into()
    })?;
    let (worst, _) = ideal_limit_records()?;
    Ok(format!("8 circuits, max tvd {worst:.1e}"))
}

fn random_circuit(dev: &DeviceModel, rng: &mut impl Rng, index: usize) -> Circuit {
    let leaves = [0usize, 1, 3];
    let mut qubits = vec![2, leaves[rng.random_range(0..3)]];
    if rng.random_bool(0.5) {
        let other = leaves.iter().copied().filter(|q| !qubits.contains(q)).collect::<Vec<_>>();
        qubits.push(other[rng.random_range(0..other.len())]);
    }
    let mut circuit = Circuit::new(format!("random_{index}"), dev.num_qubits());
    let angle = |rng: &mut dyn rand::RngCore| rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
    for _ in 0..rng.random_range(3..10) {
        let q = qubits[rng.random_range(0..qubits.len())];
        let gate = match rng.random_range(0..9) {
            0 | 1 => Gate::rx(q, angle(rng)),
            2 | 3 => Gate::ry(q, angle(rng)),
            4 => Gate::rz(q, angle(rng)),
            5 => Gate::barrier(&qubits),
            _ => {
                let leaf = qubits[1 + rng.random_range(0..qubits.len() - 1)];
                Gate::cz(2, leaf)
            }
        };
        circuit.push(gate).unwrap();
    }
    let measured: Vec<usize> = qubits.iter().copied().filter(|_| rng.random_bool(0.7)).collect();
    let measured = if measured.is_empty() { vec![qubits[0]] } else { measured };
    circuit.measure(&measured).unwrap();
    circuit
}

fn criterion_5() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let dev = DeviceModel::soprano_d();
    let mut worst: f64 = 0.0;
    let mut largest = 0;
    for i in 0..ORACLE_CIRCUITS {
        let circuit = random_circuit(&dev, &mut rng, i);
        let mut toggles = NoiseToggles::all_on();
        for e in Effect::ALL {
            if rng.random_bool(0.25) {
                toggles = toggles.without(e);
            }
        }
        let mut params = NoiseParams::from_device(&dev).with_toggles(toggles);
        params.coupling = Coupling::Shared(rng.random_range(0.0..20e6));
        let scheduled = schedule_alap(&circuit, &dev).map_err(|e| e.to_string())?;
        let noisy = transpile_noise(&scheduled, &dev, &params).map_err(|e| e.to_string())?;
        let engine = simulate(&noisy).map_err(|e| e.to_string())?;
        let oracle = superoperator_chain(&noisy);
        let dev_max = max_abs_diff(engine.matrix(), &oracle);
        ensure(dev_max <= ORACLE_TOL, || format!("{}: deviation {dev_max:e}", circuit.name))?;
        worst = worst.max(dev_max);
        largest = largest.max(noisy.register.len());
    }
    Ok(format!(
        "{ORACLE_CIRCUITS} circuits, registers up to {largest} qubits, max deviation {worst:.1e}"
    ))
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_transmon-twin"))
}

fn run(cmd: &mut Command) -> Result<(), String> {
    let out = cmd.output().map_err(|e| e.to_string())?;
    ensure(out.status.success(), || {
        format!("{cmd:?} failed: {}", String::from_utf8_lossy(&out.stderr))
    })
}

fn truth_params(dev: &DeviceModel) -> NoiseParams {
    let space = ParameterSpace::standard(dev, CouplingMode::Shared, 100e6, (0.8, 1.0));
    let mut x = vec![TRUE_COUPLING_HZ];
    x.extend(TRUE_CZ_FIDELITY);
    space.apply(&x)
}

/// Round-trip fit and calibration-magnitude ablation report through the CLI.
fn pipeline(dir: &Path) -> Result<(), String> {
    let dev = DeviceModel::soprano_d();
    let w = |name: &str, text: &str| std::fs::write(dir.join(name), text).map_err(|e| e.to_string());
    w("truth.toml", &truth_params(&dev).to_toml_string())?;
    w("calibration.toml", &NoiseParams::from_device(&dev).to_toml_string())?;
    w(
        "fit.toml",
        &format!("references = \"round_trip_refs\"\nout = \"fit\"\nseed = {FIT_SEED}\n"),
    )?;
    let shots = REFERENCE_SHOTS.to_string();
    run(bin()
        .current_dir(dir)
        .args(["emulate", "--suite", "--params", "truth.toml", "--seed", "11"])
        .args(["--shots", &shots, "--out", "round_trip_refs"]))?;
    run(bin().current_dir(dir).args(["fit", "--config", "fit.toml"]))?;
    run(bin()
        .current_dir(dir)
        .args(["emulate", "--suite", "--params", "calibration.toml", "--seed", "12"])
        .args(["--shots", &shots, "--hours", "0", "--out", "calibration_refs"]))?;
    run(bin()
        .current_dir(dir)
        .args(["report", "--references", "calibration_refs", "--model", "calibration.toml"])
        .args(["--out", "report"]))
}

fn read_json(path: &Path) -> Result<serde_json::Value, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| e.to_string())
}

fn criterion_6(dir: &Path) -> Check {
    let result = read_json(&dir.join("fit/fit_result.json"))?;
    let get = |name: &str| {
        result["parameters"][name]
            .as_f64()
            .ok_or_else(|| format!("fit result lacks {name}"))
    };
    let j = get("J")?;
    let j_err = (j - TRUE_COUPLING_HZ).abs() / TRUE_COUPLING_HZ;
    ensure(j_err <= COUPLING_REL_TOL, || format!("J = {j:.4e} Hz ({:.1}% off)", 100.0 * j_err))?;
    let mut worst: f64 = 0.0;
    for (edge, truth) in ["0-2", "1-2", "2-3"].iter().zip(TRUE_CZ_FIDELITY) {
        let f = get(&format!("F_cz[{edge}]"))?;
        ensure((f - truth).abs() <= FIDELITY_TOL, || format!("F_cz[{edge}] = {f:.5}, truth {truth}"))?;
        worst = worst.max((f - truth).abs());
    }
    let train = result["train_cost"].as_f64().ok_or("no train cost")?;
    ensure(train <= TRAIN_COST_MAX, || format!("train cost {train}"))?;
    Ok(format!(
        "J {:.2} MHz ({:.1}% off), max fidelity error {worst:.4}, train TVD {train:.4}",
        j / 1e6,
        100.0 * j_err
    ))
}

fn criterion_7(dir: &Path) -> Check {
    let csv = std::fs::read_to_string(dir.join("report/tvd_over_time.csv")).map_err(|e| e.to_string())?;
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().ok_or("empty report")?.split(',').collect();
    let row: Vec<&str> = lines.next().ok_or("no report row")?.split(',').collect();
    let col = |name: &str| -> Result<f64, String> {
        let i = header.iter().position(|h| *h == name).ok_or(format!("no column {name}"))?;
        row[i].parse().map_err(|_| format!("bad value in {name}"))
    };
    let full = col("Full model")?;
    let spam = col("No SPAM errors")?;
    let two = col("No 2-qubit gate errors")?;
    ensure(spam > full && two > full, || {
        format!("full {full}, no SPAM {spam}, no 2q {two}")
    })?;
    Ok(format!("full {full:.4} < no SPAM {spam:.4}, no 2q {two:.4}"))
}

fn collect_files(root: &Path, dir: &Path, out: &mut BTreeMap<String, Vec<u8>>) {
    let mut entries: Vec<_> = std::fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
    entries.sort();
    for p in entries {
        if p.is_dir() {
            collect_files(root, &p, out);
        } else {
            let rel = p.strip_prefix(root).unwrap().display().to_string();
            out.insert(rel, std::fs::read(&p).unwrap());
        }
    }
}

fn criterion_8(first: &Path, second: &Path) -> Check {
    let (_, a) = ideal_limit_records()?;
    let (_, b) = ideal_limit_records()?;
    ensure(a == b, || "ideal-limit records differ".into())?;
    let mut fa = BTreeMap::new();
    let mut fb = BTreeMap::new();
    collect_files(first, first, &mut fa);
    collect_files(second, second, &mut fb);
    ensure(fa.keys().eq(fb.keys()), || "different file sets".into())?;
    for (name, bytes) in &fa {
        ensure(fb[name] == *bytes, || format!("{name} differs"))?;
    }
    Ok(format!("{} report files and 8 ideal-limit records identical", fa.len() + a.len()))
}

fn report(n: usize, name: &str, budget: Duration, f: impl FnOnce() -> Check) -> bool {
    let start = Instant::now();
    let outcome = f();
    let elapsed = start.elapsed();
    let (ok, detail) = match outcome {
        Ok(d) if elapsed <= budget => (true, d),
        Ok(d) => (false, format!("{d}; exceeded {budget:?}")),
        Err(e) => (false, e),
    };
    println!(
        "criterion {n} {name:<22} {} ({:.2}s) {detail}",
        if ok { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64()
    );
    ok
}

fn main() {
    let secs = Duration::from_secs;
    let mut ok = true;
    ok &= report(1, "cptp", secs(5), criterion_1);
    ok &= report(2, "fixed points", secs(2), criterion_2);
    ok &= report(3, "single-layer example", secs(1), criterion_3);
    ok &= report(4, "ideal limit", secs(10), criterion_4);
    ok &= report(5, "oracle equivalence", secs(60), criterion_5);

    let first = tempfile::tempdir().unwrap();
    let second = tempfile::tempdir().unwrap();
    let mut runs = Err("pipeline did not run".to_string());
    ok &= report(6, "round-trip fit", secs(30 * 60), || {
        runs = pipeline(first.path()).and_then(|_| pipeline(second.path()));
        runs.clone().and_then(|_| criterion_6(first.path()))
    });
    ok &= report(7, "ablation ordering", secs(5 * 60), || {
        runs.clone().and_then(|_| criterion_7(first.path()))
    });
    ok &= report(8, "determinism", secs(60), || {
        runs.clone().and_then(|_| criterion_8(first.path(), second.path()))
    });
    if !ok {
        std::process::exit(1);
    }
}

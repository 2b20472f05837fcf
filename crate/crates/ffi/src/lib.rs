//! C interface to the emulator.
//!
//! Objects are opaque handles created by `twin_*` constructors and released
//! with the matching `*_free`. Every fallible call returns a [`TwinStatus`];
//! on failure `twin_last_error` describes the problem.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use transmon_twin::distribution::DistributionRecord;
use transmon_twin::report::load_params;
use transmon_twin::transpile::{Effect, NoiseParams};
use transmon_twin::{tvd, Circuit, DeviceModel, Emulator, Error, ShotDistribution};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TwinStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Io = 3,
    Parse = 4,
    Validation = 5,
    Simulation = 6,
    BufferTooSmall = 7,
    Panic = 8,
}

/// Calibration snapshot.
pub struct TwinDevice(DeviceModel);

/// Gate-level circuit.
pub struct TwinCircuit(Circuit);

/// Noise parameters and effect switches.
pub struct TwinParams(NoiseParams);

/// Outcome distribution.
pub struct TwinDistribution(ShotDistribution);

/// Switch bits for `twin_params_disable`.
pub const TWIN_EFFECT_PASSIVE: u32 = 1;
pub const TWIN_EFFECT_SPAM: u32 = 2;
pub const TWIN_EFFECT_TWO_QUBIT_GATE: u32 = 4;
pub const TWIN_EFFECT_SINGLE_QUBIT_GATE: u32 = 8;
pub const TWIN_EFFECT_ALWAYS_ON: u32 = 16;

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).unwrap_or_default());
}

fn status_of(e: &Error) -> TwinStatus {
    match e {
        Error::Io { .. } => TwinStatus::Io,
        Error::Parse { .. } => TwinStatus::Parse,
        Error::InCircuit { source, .. } => status_of(source),
        e if e.is_validation() => TwinStatus::Validation,
        _ => TwinStatus::Simulation,
    }
}

fn guard(f: impl FnOnce() -> Result<(), TwinStatus>) -> TwinStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            TwinStatus::Ok
        }
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("internal panic");
            TwinStatus::Panic
        }
    }
}

fn fail(e: Error) -> TwinStatus {
    set_error(e.to_string());
    status_of(&e)
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, TwinStatus> {
    if p.is_null() {
        set_error(format!("{name} is null"));
        return Err(TwinStatus::NullPointer);
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        set_error(format!("{name} is not valid UTF-8"));
        TwinStatus::InvalidUtf8
    })
}

unsafe fn ref_arg<'a, T>(p: *const T, name: &str) -> Result<&'a T, TwinStatus> {
    p.as_ref().ok_or_else(|| {
        set_error(format!("{name} is null"));
        TwinStatus::NullPointer
    })
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), TwinStatus> {
    if out.is_null() {
        set_error("output pointer is null");
        return Err(TwinStatus::NullPointer);
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn free<T>(p: *mut T) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Message of the last failed call on this thread; empty after a success.
/// Valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn twin_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Loads a device calibration file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn twin_device_load(path: *const c_char, out: *mut *mut TwinDevice) -> TwinStatus {
    guard(|| {
        let path = str_arg(path, "path")?;
        let dev = DeviceModel::load(path).map_err(fail)?;
        put(out, TwinDevice(dev))
    })
}

/// The bundled five-qubit star device.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn twin_device_bundled(out: *mut *mut TwinDevice) -> TwinStatus {
    guard(|| put(out, TwinDevice(DeviceModel::soprano_d())))
}

/// Number of qubits of the device, 0 for a null handle.
///
/// # Safety
/// `device` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn twin_device_num_qubits(device: *const TwinDevice) -> usize {
    device.as_ref().map_or(0, |d| d.0.num_qubits())
}

/// # Safety
/// `device` must be null or a handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn twin_device_free(device: *mut TwinDevice) {
    free(device)
}

/// Parses circuit text.
///
/// # Safety
/// `text` and `name` must be NUL-terminated strings and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn twin_circuit_parse(
    text: *const c_char,
    name: *const c_char,
    out: *mut *mut TwinCircuit,
) -> TwinStatus {
    guard(|| {
        let text = str_arg(text, "text")?;
        let name = str_arg(name, "name")?;
        put(out, TwinCircuit(Circuit::parse(text, name).map_err(fail)?))
    })
}

/// Loads a circuit file; the circuit is named after the file stem.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn twin_circuit_load(path: *const c_char, out: *mut *mut TwinCircuit) -> TwinStatus {
    guard(|| {
        let path = str_arg(path, "path")?;
        put(out, TwinCircuit(Circuit::load(path).map_err(fail)?))
    })
}

/// # Safety
/// `circuit` must be null or a handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn twin_circuit_free(circuit: *mut TwinCircuit) {
    free(circuit)
}

/// Calibration values of `device` with every effect on.
///
/// # Safety
/// `device` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn twin_params_from_device(
    device: *const TwinDevice,
    out: *mut *mut TwinParams,
) -> TwinStatus {
    guard(|| {
        let device = ref_arg(device, "device")?;
        put(out, TwinParams(NoiseParams::from_device(&device.0)))
    })
}

/// Loads parameters from a TOML file or a fit result.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn twin_params_load(path: *const c_char, out: *mut *mut TwinParams) -> TwinStatus {
    guard(|| {
        let path = str_arg(path, "path")?;
        put(out, TwinParams(load_params(path.as_ref()).map_err(fail)?))
    })
}

/// Switches off the effects named by the `TWIN_EFFECT_*` bits in `mask`.
///
/// # Safety
/// `params` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn twin_params_disable(params: *mut TwinParams, mask: u32) -> TwinStatus {
    guard(|| {
        let params = params.as_mut().ok_or_else(|| {
            set_error("params is null");
            TwinStatus::NullPointer
        })?;
        let bits = [
            (TWIN_EFFECT_PASSIVE, Effect::Passive),
            (TWIN_EFFECT_SPAM, Effect::Spam),
            (TWIN_EFFECT_TWO_QUBIT_GATE, Effect::TwoQubitGate),
            (TWIN_EFFECT_SINGLE_QUBIT_GATE, Effect::SingleQubitGate),
            (TWIN_EFFECT_ALWAYS_ON, Effect::AlwaysOn),
        ];
        if mask & !bits.iter().fold(0, |m, (b, _)| m | b) != 0 {
            set_error(format!("unknown effect bits in {mask:#x}"));
            return Err(TwinStatus::Validation);
        }
        for (bit, effect) in bits {
            if mask & bit != 0 {
                params.0.toggles = params.0.toggles.without(effect);
            }
        }
        Ok(())
    })
}

/// # Safety
/// `params` must be null or a handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn twin_params_free(params: *mut TwinParams) {
    free(params)
}

/// Exact outcome distribution of `circuit`, readout error included.
/// A null `params` uses the device calibration.
///
/// # Safety
/// Handles must be live (or null for `params`) and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn twin_emulate(
    device: *const TwinDevice,
    params: *const TwinParams,
    circuit: *const TwinCircuit,
    out: *mut *mut TwinDistribution,
) -> TwinStatus {
    guard(|| {
        let device = ref_arg(device, "device")?;
        let circuit = ref_arg(circuit, "circuit")?;
        let params = match params.as_ref() {
            Some(p) => p.0.clone(),
            None => NoiseParams::from_device(&device.0),
        };
        let d = Emulator::new(&device.0, params)
            .distribution(&circuit.0)
            .map_err(fail)?;
        put(out, TwinDistribution(d))
    })
}

/// Draws `shots` samples with a fixed seed.
///
/// # Safety
/// `dist` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn twin_distribution_sample(
    dist: *const TwinDistribution,
    shots: u64,
    seed: u64,
    out: *mut *mut TwinDistribution,
) -> TwinStatus {
    guard(|| {
        let dist = ref_arg(dist, "distribution")?;
        put(out, TwinDistribution(dist.0.sample(shots, seed).map_err(fail)?))
    })
}

/// Number of measured bits, 0 for a null handle.
///
/// # Safety
/// `dist` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn twin_distribution_width(dist: *const TwinDistribution) -> usize {
    dist.as_ref().map_or(0, |d| d.0.width())
}

/// Writes the `2^width` outcome probabilities into `buf`, first measured
/// qubit as the most significant bit.
///
/// # Safety
/// `dist` must be a live handle and `buf` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn twin_distribution_probabilities(
    dist: *const TwinDistribution,
    buf: *mut f64,
    len: usize,
) -> TwinStatus {
    guard(|| {
        let dist = ref_arg(dist, "distribution")?;
        let v = dist.0.to_vector();
        if buf.is_null() {
            set_error("buffer is null");
            return Err(TwinStatus::NullPointer);
        }
        if len < v.len() {
            set_error(format!("buffer holds {len} values, need {}", v.len()));
            return Err(TwinStatus::BufferTooSmall);
        }
        ptr::copy_nonoverlapping(v.as_ptr(), buf, v.len());
        Ok(())
    })
}

/// Total variation distance between two distributions of equal width.
///
/// # Safety
/// Handles must be live and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn twin_tvd(
    a: *const TwinDistribution,
    b: *const TwinDistribution,
    out: *mut f64,
) -> TwinStatus {
    guard(|| {
        let a = ref_arg(a, "a")?;
        let b = ref_arg(b, "b")?;
        let value = tvd(&a.0, &b.0).map_err(fail)?;
        if out.is_null() {
            set_error("output pointer is null");
            return Err(TwinStatus::NullPointer);
        }
        *out = value;
        Ok(())
    })
}

/// JSON form of the distribution, labelled `circuit`. Release the string
/// with `twin_string_free`.
///
/// # Safety
/// `dist` must be a live handle, `circuit` a NUL-terminated string and
/// `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn twin_distribution_to_json(
    dist: *const TwinDistribution,
    circuit: *const c_char,
    out: *mut *mut c_char,
) -> TwinStatus {
    guard(|| {
        let dist = ref_arg(dist, "distribution")?;
        let circuit = str_arg(circuit, "circuit")?;
        let json = DistributionRecord {
            circuit: circuit.to_string(),
            seed: None,
            hours: None,
            distribution: dist.0.clone(),
        }
        .to_json();
        if out.is_null() {
            set_error("output pointer is null");
            return Err(TwinStatus::NullPointer);
        }
        *out = CString::new(json).expect("json has no NUL").into_raw();
        Ok(())
    })
}

/// # Safety
/// `dist` must be null or a handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn twin_distribution_free(dist: *mut TwinDistribution) {
    free(dist)
}

/// # Safety
/// `s` must be null or a string returned by this library, not freed before.
#[no_mangle]
pub unsafe extern "C" fn twin_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

// SPDX-License-Identifier: Apache-2.0

//! C ABI for `quenchctl`.
//!
//! Conventions:
//! * every fallible call returns a [`QcStatus`]; `QC_STATUS_OK` is zero;
//! * results come back through out-pointers, written only on success;
//! * on failure, [`qc_last_error`] gives a message for the calling thread;
//! * handles are opaque, created by `*_new` calls and released by `*_free`;
//! * panics never cross the boundary; they surface as `QC_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use quenchctl::cli::{load_config, run_config, CliError};
use quenchctl::control::{build_fz, feasibility, ControlProtocol, ProtocolFamily};
use quenchctl::disorder::disorder_ensemble;
use quenchctl::ode::Tolerance;
use quenchctl::quench::{quench_all_modes, NoiseSpec};
use quenchctl::spectral::{gap_profile, ModelSpec};
use quenchctl::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    /// The invariant control is not real: the duration is below `tau_min`.
    NonRealControl = 3,
    DegenerateGap = 4,
    /// Adaptive integration failed (step underflow or step budget).
    Integrator = 5,
    /// Eigensolver, isometry or other numerical check failed.
    Numerical = 6,
    /// A config file failed to parse or validate.
    Config = 7,
    Io = 8,
    Panic = 9,
}

/// Protocol family selector.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QcFamily {
    Invariant = 0,
    Faquad = 1,
    Linear = 2,
}

impl From<QcFamily> for ProtocolFamily {
    fn from(f: QcFamily) -> Self {
        match f {
            QcFamily::Invariant => ProtocolFamily::Invariant,
            QcFamily::Faquad => ProtocolFamily::Faquad,
            QcFamily::Linear => ProtocolFamily::Linear,
        }
    }
}

/// Opaque momentum-space chain model.
pub struct QcModel {
    spec: ModelSpec,
}

/// Opaque control schedule `g(t)`.
pub struct QcProtocol {
    protocol: ControlProtocol,
    model: ModelSpec,
}

/// Summary of a quench over all modes.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct QcQuenchSummary {
    pub tau: f64,
    pub tau_over_qsl: f64,
    /// Density of excitations.
    pub n: f64,
    pub fidelity: f64,
    pub infidelity: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(message: impl Into<String>) {
    let text = message.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).unwrap_or_default());
}

fn status_of(e: &Error) -> QcStatus {
    match e {
        Error::NonRealControl { .. } => QcStatus::NonRealControl,
        Error::DegenerateGap { .. } | Error::DegenerateBdG { .. } => QcStatus::DegenerateGap,
        Error::StepUnderflow { .. } | Error::TooManySteps { .. } => QcStatus::Integrator,
        Error::OddParticleCount(_)
        | Error::TooFewParticles(_)
        | Error::InvalidParameter { .. }
        | Error::NonPositiveObservable { .. }
        | Error::TooFewPoints { .. } => QcStatus::InvalidArgument,
        Error::ModeFailed { source, .. } | Error::RealizationFailed { source, .. } => {
            status_of(source)
        }
        _ => QcStatus::Numerical,
    }
}

fn fail(e: Error) -> QcStatus {
    set_last_error(e.to_string());
    status_of(&e)
}

/// Runs `body`, converting panics to `QC_PANIC` and clearing the error on success.
fn guard(body: impl FnOnce() -> QcStatus) -> QcStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => {
            if status == QcStatus::Ok {
                set_last_error("");
            }
            status
        }
        Err(panic) => {
            let msg = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("internal panic: {msg}"));
            QcStatus::Panic
        }
    }
}

fn null(name: &str) -> QcStatus {
    set_last_error(format!("null pointer passed as `{name}`"));
    QcStatus::NullPointer
}

fn tolerance(rtol: f64, atol: f64) -> Result<Tolerance, QcStatus> {
    if rtol > 0.0 && rtol < 1.0 && atol > 0.0 && atol.is_finite() {
        Ok(Tolerance::new(rtol, atol))
    } else {
        set_last_error(format!(
            "tolerances must satisfy 0 < rtol < 1 and atol > 0, got {rtol}, {atol}"
        ));
        Err(QcStatus::InvalidArgument)
    }
}

/// Message of the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next `qc_*` call on the same thread.
#[no_mangle]
pub extern "C" fn qc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn qc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

fn model_new(spec: ModelSpec, out: *mut *mut QcModel) -> QcStatus {
    if out.is_null() {
        return null("out");
    }
    guard(|| match spec.validate() {
        Ok(()) => {
            // SAFETY: `out` is non-null and the caller guarantees it is writable.
            unsafe { *out = Box::into_raw(Box::new(QcModel { spec })) };
            QcStatus::Ok
        }
        Err(e) => fail(e),
    })
}

/// Periodic transverse-field Ising chain of `n` spins (even, at least 4).
#[no_mangle]
pub extern "C" fn qc_model_tfim_new(n: usize, j: f64, out: *mut *mut QcModel) -> QcStatus {
    model_new(ModelSpec::tfim(n, j), out)
}

/// Long-range Kitaev chain with hopping exponent `alpha` and pairing exponent `beta`.
#[no_mangle]
pub extern "C" fn qc_model_lrk_new(
    n: usize,
    j: f64,
    alpha: f64,
    beta: f64,
    out: *mut *mut QcModel,
) -> QcStatus {
    model_new(ModelSpec::lrk(n, j, alpha, beta), out)
}

/// Releases a model; null is ignored.
///
/// # Safety
/// `model` must come from a `qc_model_*_new` call and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn qc_model_free(model: *mut QcModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// `tau_QSL = pi / Delta` for the sweep `g0 -> g1`.
///
/// # Safety
/// `model` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn qc_model_tau_qsl(
    model: *const QcModel,
    g0: f64,
    g1: f64,
    out: *mut f64,
) -> QcStatus {
    if model.is_null() {
        return null("model");
    }
    if out.is_null() {
        return null("out");
    }
    let model = &*model;
    guard(|| {
        let result = model
            .spec
            .decompose()
            .and_then(|modes| gap_profile(&modes, g0, g1));
        match result {
            Ok(p) => {
                *out = p.tau_qsl;
                QcStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Builds a control of duration `tau` designed on the slowest mode of `model`.
/// `k_order` and `k_norm` only matter for the invariant family.
///
/// # Safety
/// `model` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn qc_protocol_new(
    model: *const QcModel,
    family: QcFamily,
    g0: f64,
    g1: f64,
    tau: f64,
    k_order: usize,
    k_norm: f64,
    out: *mut *mut QcProtocol,
) -> QcStatus {
    if model.is_null() {
        return null("model");
    }
    if out.is_null() {
        return null("out");
    }
    let spec = (*model).spec;
    guard(|| {
        let built = spec.lowest_mode().and_then(|mode| {
            ControlProtocol::build(family.into(), &mode, g0, g1, tau, k_order, k_norm)
        });
        match built {
            Ok(protocol) => {
                *out = Box::into_raw(Box::new(QcProtocol {
                    protocol,
                    model: spec,
                }));
                QcStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Releases a protocol; null is ignored.
///
/// # Safety
/// `protocol` must come from `qc_protocol_new` and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn qc_protocol_free(protocol: *mut QcProtocol) {
    if !protocol.is_null() {
        drop(Box::from_raw(protocol));
    }
}

/// Duration of the protocol; NaN for a null handle.
///
/// # Safety
/// `protocol` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn qc_protocol_tau(protocol: *const QcProtocol) -> f64 {
    if protocol.is_null() {
        return f64::NAN;
    }
    (*protocol).protocol.tau
}

/// `g(t)` and `dg/dt(t)`; `t` is clamped to `[0, tau]`. Either out-pointer may be null.
///
/// # Safety
/// `protocol` must be a live handle; non-null out-pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn qc_protocol_eval(
    protocol: *const QcProtocol,
    t: f64,
    g: *mut f64,
    dg_dt: *mut f64,
) -> QcStatus {
    if protocol.is_null() {
        return null("protocol");
    }
    let p = &(*protocol).protocol;
    guard(|| {
        let value = p.eval(t);
        if !value.is_finite() {
            set_last_error(format!("control is not real at t = {t}"));
            return QcStatus::NonRealControl;
        }
        if !g.is_null() {
            *g = value;
        }
        if !dg_dt.is_null() {
            *dg_dt = p.eval_rate(t);
        }
        QcStatus::Ok
    })
}

/// Minimum feasible duration of the order-`k_order` invariant control on `model`.
///
/// # Safety
/// `model` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn qc_invariant_tau_min(
    model: *const QcModel,
    g0: f64,
    g1: f64,
    k_order: usize,
    k_norm: f64,
    out: *mut f64,
) -> QcStatus {
    if model.is_null() {
        return null("model");
    }
    if out.is_null() {
        return null("out");
    }
    let spec = (*model).spec;
    guard(|| {
        let report = spec.lowest_mode().and_then(|mode| {
            let tau_qsl = gap_profile(&spec.decompose()?, g0, g1)?.tau_qsl;
            let ansatz = build_fz(&mode, g0, g1, tau_qsl, k_order, k_norm)?;
            Ok(feasibility(&ansatz, &mode))
        });
        match report {
            Ok(r) => {
                *out = r.tau_min;
                QcStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Applies `protocol` to every mode of the model it was built for.
/// `w > 0` adds white control noise of that strength (Lindblad dephasing).
///
/// # Safety
/// `protocol` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn qc_quench(
    protocol: *const QcProtocol,
    w: f64,
    rtol: f64,
    atol: f64,
    out: *mut QcQuenchSummary,
) -> QcStatus {
    if protocol.is_null() {
        return null("protocol");
    }
    if out.is_null() {
        return null("out");
    }
    let handle = &*protocol;
    guard(|| {
        let tol = match tolerance(rtol, atol) {
            Ok(t) => t,
            Err(s) => return s,
        };
        let noise = if w > 0.0 {
            match NoiseSpec::new(w, handle.model.j) {
                Ok(n) => Some(n),
                Err(e) => return fail(e),
            }
        } else if w == 0.0 {
            None
        } else {
            set_last_error(format!("noise strength must be non-negative, got {w}"));
            return QcStatus::InvalidArgument;
        };
        match quench_all_modes(&handle.model, &handle.protocol, noise.as_ref(), tol) {
            Ok(r) => {
                *out = QcQuenchSummary {
                    tau: r.tau,
                    tau_over_qsl: r.tau_over_qsl,
                    n: r.n,
                    fidelity: r.fidelity,
                    infidelity: r.infidelity,
                };
                QcStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Mean and sample standard deviation of the defect density over
/// `realizations` disordered chains (seeds `base_seed + i`) driven by `protocol`.
/// The chain size and coupling come from the protocol's model, which must be a TFIM.
///
/// # Safety
/// `protocol` must be a live handle; `mean` and `stddev` writable.
#[no_mangle]
pub unsafe extern "C" fn qc_disorder_ensemble(
    protocol: *const QcProtocol,
    lambda_width: f64,
    realizations: usize,
    base_seed: u64,
    rtol: f64,
    atol: f64,
    mean: *mut f64,
    stddev: *mut f64,
) -> QcStatus {
    if protocol.is_null() {
        return null("protocol");
    }
    if mean.is_null() || stddev.is_null() {
        return null("mean/stddev");
    }
    let handle = &*protocol;
    guard(|| {
        let tol = match tolerance(rtol, atol) {
            Ok(t) => t,
            Err(s) => return s,
        };
        let m = &handle.model;
        if m.family != quenchctl::spectral::ModelFamily::Tfim {
            set_last_error("disorder ensembles need a protocol built on a TFIM model");
            return QcStatus::InvalidArgument;
        }
        match disorder_ensemble(
            m.n,
            m.j,
            &handle.protocol,
            lambda_width,
            realizations,
            base_seed,
            tol,
        ) {
            Ok(stats) => {
                *mean = stats.mean;
                *stddev = stats.stddev;
                QcStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Runs a TOML experiment config, writing CSVs and `manifest.json` into `out_dir`.
/// A null `out_dir` uses the config's `output.dir`.
///
/// # Safety
/// `config_path` must be a NUL-terminated string; `out_dir` null or NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn qc_run_config(
    config_path: *const c_char,
    out_dir: *const c_char,
) -> QcStatus {
    if config_path.is_null() {
        return null("config_path");
    }
    let Ok(path) = CStr::from_ptr(config_path).to_str() else {
        set_last_error("config_path is not valid UTF-8");
        return QcStatus::InvalidArgument;
    };
    let dir = if out_dir.is_null() {
        None
    } else {
        match CStr::from_ptr(out_dir).to_str() {
            Ok(d) => Some(d.to_string()),
            Err(_) => {
                set_last_error("out_dir is not valid UTF-8");
                return QcStatus::InvalidArgument;
            }
        }
    };
    guard(|| {
        let result = load_config(Path::new(path)).and_then(|cfg| {
            let dir = dir
                .map(Into::into)
                .unwrap_or_else(|| cfg.output.dir.clone());
            run_config(&cfg, &dir, None)
        });
        match result {
            Ok(_) => QcStatus::Ok,
            Err(e) => {
                set_last_error(e.to_string());
                match e {
                    CliError::Config(_) | CliError::Parse { .. } | CliError::Input(_) => {
                        QcStatus::Config
                    }
                    CliError::Io { .. } => QcStatus::Io,
                    CliError::Runtime { source, .. } => status_of(&source),
                }
            }
        }
    })
}

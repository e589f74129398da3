//! C ABI over `lookahead-smc`.
//!
//! Every function returns an [`SmcStatus`]; results come back through out-pointers.
//! Handles are opaque and owned by the caller, who releases them with the matching
//! `*_free`. Strings returned by the library are released with [`smc_string_free`].
//! On failure, [`smc_last_error`] describes the most recent error on the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use lookahead_smc::bench::{run_experiment, summarize, write_csv, ExperimentConfig, ExperimentKind, MetricsRow, RowKind};
use lookahead_smc::lookahead::{PilotConfig, Strategy};
use lookahead_smc::model::{ModelSpec, ObservationSeq};
use lookahead_smc::models::DiscreteHmm;
use lookahead_smc::numeric::normalize_log;
use lookahead_smc::oracle::forward_backward;
use lookahead_smc::particle::ParticleSystem;
use lookahead_smc::rng::seeded;
use lookahead_smc::SmcError;

/// Result of every call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SmcStatus {
    Ok = 0,
    NullPointer = 1,
    Config = 2,
    Numerical = 3,
    InvalidArgument = 4,
    Io = 5,
    Panic = 6,
}

/// An experiment configuration.
pub struct SmcExperiment {
    config: ExperimentConfig,
}

/// Metrics rows produced by a run.
pub struct SmcResults {
    rows: Vec<MetricsRow>,
}

/// A finite hidden Markov model with integer observations.
pub struct SmcHmm {
    model: DiscreteHmm,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &SmcError) -> SmcStatus {
    match e.exit_code() {
        2 => SmcStatus::Config,
        1 => SmcStatus::Io,
        _ => SmcStatus::Numerical,
    }
}

struct Failure(SmcStatus, String);

impl From<SmcError> for Failure {
    fn from(e: SmcError) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure(SmcStatus::InvalidArgument, msg.into())
}

fn null(name: &str) -> Failure {
    Failure(SmcStatus::NullPointer, format!("{name} is null"))
}

/// Run `f`, translating errors and panics into a status and the thread's last error.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> SmcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SmcStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("panic: {msg}"));
            SmcStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(name));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| invalid(format!("{name} is not UTF-8")))
}

unsafe fn handle<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(name))
}

unsafe fn slice_arg<'a, T>(p: *const T, len: usize, name: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(name));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn write_out<T>(out: *mut T, value: T, name: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null(name));
    }
    out.write(value);
    Ok(())
}

fn into_c_string(s: String) -> Result<*mut c_char, Failure> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| invalid("string contains NUL"))
}

/// Message of the last failed call on this thread, or NULL. The pointer stays valid
/// until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn smc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Release a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn smc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn smc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Preset configuration for `kind` (`nonlinear`, `tracking` or `qam`).
///
/// # Safety
/// `kind` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn smc_experiment_preset(kind: *const c_char, out: *mut *mut SmcExperiment) -> SmcStatus {
    guard(|| {
        let kind: ExperimentKind = str_arg(kind, "kind")?.parse()?;
        let config = ExperimentConfig::preset(kind);
        write_out(out, Box::into_raw(Box::new(SmcExperiment { config })), "out")
    })
}

/// Configuration from JSON; fields left out take the experiment's preset.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn smc_experiment_from_json(json: *const c_char, out: *mut *mut SmcExperiment) -> SmcStatus {
    guard(|| {
        let config = ExperimentConfig::from_json(str_arg(json, "json")?)?;
        write_out(out, Box::into_raw(Box::new(SmcExperiment { config })), "out")
    })
}

/// The resolved configuration as JSON; release with [`smc_string_free`].
///
/// # Safety
/// `experiment` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn smc_experiment_to_json(experiment: *const SmcExperiment, out: *mut *mut c_char) -> SmcStatus {
    guard(|| {
        let e = handle(experiment, "experiment")?;
        let json = serde_json::to_string_pretty(&e.config).map_err(SmcError::from)?;
        write_out(out, into_c_string(json)?, "out")
    })
}

/// Override the number of repetitions and the seed.
///
/// # Safety
/// `experiment` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn smc_experiment_set_reps(experiment: *mut SmcExperiment, reps: usize, seed: u64) -> SmcStatus {
    guard(|| {
        let e = experiment.as_mut().ok_or_else(|| null("experiment"))?;
        if reps == 0 {
            return Err(invalid("reps must be positive"));
        }
        e.config.reps = reps;
        e.config.seed = seed;
        Ok(())
    })
}

/// # Safety
/// `experiment` must come from this library and not be freed twice. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn smc_experiment_free(experiment: *mut SmcExperiment) {
    if !experiment.is_null() {
        drop(Box::from_raw(experiment));
    }
}

/// Run every repetition of the experiment.
///
/// # Safety
/// `experiment` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn smc_experiment_run(experiment: *const SmcExperiment, out: *mut *mut SmcResults) -> SmcStatus {
    guard(|| {
        let e = handle(experiment, "experiment")?;
        let rows = run_experiment(&e.config)?;
        write_out(out, Box::into_raw(Box::new(SmcResults { rows })), "out")
    })
}

/// Number of rows, repetition and pooled rows included.
///
/// # Safety
/// `results` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn smc_results_len(results: *const SmcResults, out: *mut usize) -> SmcStatus {
    guard(|| write_out(out, handle(results, "results")?.rows.len(), "out"))
}

/// Mean over repetitions of `metric` (a CSV column name such as `rmse1`, `mae1`,
/// `ber` or `mean_delta`) at the given total lookahead.
///
/// # Safety
/// `results` must be a live handle; `metric` a NUL-terminated string; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn smc_results_mean(
    results: *const SmcResults,
    metric: *const c_char,
    lookahead: usize,
    out: *mut f64,
) -> SmcStatus {
    guard(|| {
        let r = handle(results, "results")?;
        let metric = str_arg(metric, "metric")?;
        let mean = summarize(&r.rows)
            .into_iter()
            .find(|row| row.kind == RowKind::Mean && row.lookahead == lookahead)
            .ok_or_else(|| invalid(format!("no rows at lookahead {lookahead}")))?;
        let value = serde_json::to_value(&mean).map_err(SmcError::from)?;
        let v = value
            .get(metric)
            .ok_or_else(|| invalid(format!("unknown metric {metric}")))?
            .as_f64()
            .ok_or_else(|| invalid(format!("metric {metric} was not recorded")))?;
        write_out(out, v, "out")
    })
}

/// The rows and their summaries as CSV; release with [`smc_string_free`].
///
/// # Safety
/// `results` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn smc_results_to_csv(results: *const SmcResults, out: *mut *mut c_char) -> SmcStatus {
    guard(|| {
        let r = handle(results, "results")?;
        let mut buf = Vec::new();
        write_csv(&r.rows, &mut buf)?;
        let text = String::from_utf8(buf).map_err(|_| invalid("CSV is not UTF-8"))?;
        write_out(out, into_c_string(text)?, "out")
    })
}

/// # Safety
/// `results` must come from this library and not be freed twice. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn smc_results_free(results: *mut SmcResults) {
    if !results.is_null() {
        drop(Box::from_raw(results));
    }
}

/// HMM from row-major tables: `initial[n]`, `transition[n*n]`, `emission[n*k]`.
///
/// # Safety
/// The arrays must hold the stated number of elements; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn smc_hmm_new(
    n_states: usize,
    n_symbols: usize,
    initial: *const f64,
    transition: *const f64,
    emission: *const f64,
    out: *mut *mut SmcHmm,
) -> SmcStatus {
    guard(|| {
        if n_states == 0 || n_symbols == 0 {
            return Err(invalid("sizes must be positive"));
        }
        let initial = slice_arg(initial, n_states, "initial")?.to_vec();
        let rows = |p: &[f64], width: usize| p.chunks(width).map(<[f64]>::to_vec).collect::<Vec<_>>();
        let transition = rows(slice_arg(transition, n_states * n_states, "transition")?, n_states);
        let emission = rows(slice_arg(emission, n_states * n_symbols, "emission")?, n_symbols);
        let model = DiscreteHmm::new(initial, transition, emission)?;
        write_out(out, Box::into_raw(Box::new(SmcHmm { model })), "out")
    })
}

/// # Safety
/// `hmm` must come from this library and not be freed twice. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn smc_hmm_free(hmm: *mut SmcHmm) {
    if !hmm.is_null() {
        drop(Box::from_raw(hmm));
    }
}

unsafe fn observations(hmm: &SmcHmm, ys: *const usize, len: usize) -> Result<ObservationSeq<usize>, Failure> {
    let ys = slice_arg(ys, len, "ys")?;
    if let Some(bad) = ys.iter().find(|&&y| y >= hmm.model.n_symbols()) {
        return Err(invalid(format!("observation {bad} outside the alphabet")));
    }
    Ok(ObservationSeq::new(ys.to_vec()))
}

/// Exact `P(x_t | y_{1:t+delta})` by forward-backward; `out` receives `n_states` values.
///
/// # Safety
/// `hmm` must be a live handle, `ys` hold `len` values (`y_1..y_len`), `out` hold `n_states`.
#[no_mangle]
pub unsafe extern "C" fn smc_hmm_posterior(
    hmm: *const SmcHmm,
    ys: *const usize,
    len: usize,
    t: usize,
    delta: usize,
    out: *mut f64,
) -> SmcStatus {
    guard(|| {
        let h = handle(hmm, "hmm")?;
        let obs = observations(h, ys, len)?;
        let probs = forward_backward(&h.model, &obs, t, delta)?;
        if out.is_null() {
            return Err(null("out"));
        }
        std::slice::from_raw_parts_mut(out, probs.len()).copy_from_slice(&probs);
        Ok(())
    })
}

/// Particle estimate of `P(x_t | y_{1:t+delta})` with `particles` particles.
///
/// `pilots == 0` selects exact lookahead sampling; otherwise the random-pilot scheme
/// with that many pilots per candidate. `out` receives `n_states` values.
///
/// # Safety
/// As for [`smc_hmm_posterior`].
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn smc_hmm_lookahead_filter(
    hmm: *const SmcHmm,
    ys: *const usize,
    len: usize,
    t: usize,
    delta: usize,
    pilots: usize,
    particles: usize,
    seed: u64,
    out: *mut f64,
) -> SmcStatus {
    guard(|| {
        let h = handle(hmm, "hmm")?;
        let obs = observations(h, ys, len)?;
        if particles == 0 {
            return Err(invalid("particles must be positive"));
        }
        if t + delta > len {
            return Err(invalid(format!("t + delta = {} exceeds {len} observations", t + delta)));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let strategy = if pilots == 0 {
            Strategy::Exact { delta }
        } else {
            Strategy::Pilot(PilotConfig::finite(delta, pilots))
        };
        let spec = ModelSpec::new(h.model.clone());
        let mut rng = seeded(seed);
        let mut sys: ParticleSystem<usize, usize> = ParticleSystem::new(particles);
        let mut last = None;
        for _ in 0..=t {
            last = Some(strategy.advance(&mut sys, &spec, &obs, &mut rng)?);
        }
        let step = last.expect("at least one step");
        let w = normalize_log(sys.track_or_concurrent(step.estimate_track));
        let probs = std::slice::from_raw_parts_mut(out, h.model.n_states());
        probs.fill(0.0);
        for (p, path) in w.iter().zip(&sys.paths) {
            probs[*path.state_at(t).expect("paths reach t")] += p;
        }
        Ok(())
    })
}

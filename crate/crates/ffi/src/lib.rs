//! C ABI over `cteleport`.
//!
//! Every fallible call returns a [`CtStatus`]; on failure a message is kept
//! per thread and can be read with [`ct_last_error_message`]. Traces are
//! opaque handles released with [`ct_trace_free`]; strings handed out are
//! released with [`ct_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use num_complex::Complex64;

use cteleport::cli::{TraceConfig, TraceDocument};
use cteleport::netsim::{efficiency_report, simulate_session, SessionConfig};
use cteleport::protocol::{correction_lookup, verify_all_branches, CorrectionRule, ModePlan, NParity, RunStatus};
use cteleport::qss::{qss_run, ClassicalMessage};
use cteleport::{BellOutcome, ChannelVariant, Error, Gate, Sign, TwoQubitInput};

pub const CT_VARIANT_X_SECOND: u32 = 0;
pub const CT_VARIANT_Z_LATE_H: u32 = 1;
pub const CT_VARIANT_DIRECT: u32 = 2;

/// Outcome codes: Φ+, Φ−, Ψ+, Ψ−.
pub const CT_PHI_PLUS: u32 = 0;
pub const CT_PHI_MINUS: u32 = 1;
pub const CT_PSI_PLUS: u32 = 2;
pub const CT_PSI_MINUS: u32 = 3;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CtStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    NotNormalized = 3,
    ImpossibleBranch = 4,
    OracleFailure = 5,
    BufferTooSmall = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CtComplex {
    pub re: f64,
    pub im: f64,
}

impl From<Complex64> for CtComplex {
    fn from(z: Complex64) -> Self {
        CtComplex { re: z.re, im: z.im }
    }
}

/// `ua`/`ub` are 0..3 for `U0..U3`. `present` is false when no correction
/// was applied.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CtCorrection {
    pub ua: u8,
    pub ub: u8,
    pub cnot: bool,
    pub present: bool,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CtEfficiency {
    pub q_u: u32,
    pub q_t: u32,
    pub b_t: u32,
    pub eta_q: f64,
    pub eta_t: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CtVerifySummary {
    pub branches: u64,
    pub passed: u64,
    pub max_probability_deviation: f64,
    pub max_fidelity_deviation: f64,
    pub max_predictor_distance: f64,
    pub cnot_used: bool,
    pub all_passed: bool,
}

/// Opaque record of one run.
pub struct CtTrace {
    doc: TraceDocument,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn fail(status: CtStatus, msg: impl AsRef<str>) -> CtStatus {
    set_error(msg.as_ref());
    status
}

fn status_of(e: &Error) -> CtStatus {
    match e {
        Error::NotNormalized { .. } => CtStatus::NotNormalized,
        Error::ImpossibleBranch { .. } | Error::ZeroProbability { .. } => CtStatus::ImpossibleBranch,
        Error::OracleFailure(_) => CtStatus::OracleFailure,
        _ => CtStatus::InvalidArgument,
    }
}

/// Runs `body`, turning errors and panics into status codes.
fn guard(body: impl FnOnce() -> Result<(), CtStatus>) -> CtStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            set_error("");
            CtStatus::Ok
        }
        Ok(Err(s)) => s,
        Err(_) => fail(CtStatus::Panic, "internal panic"),
    }
}

fn lift<T>(r: cteleport::Result<T>) -> Result<T, CtStatus> {
    r.map_err(|e| fail(status_of(&e), e.to_string()))
}

fn variant_from(code: u32) -> Result<ChannelVariant, CtStatus> {
    match code {
        CT_VARIANT_X_SECOND => Ok(ChannelVariant::XSecond),
        CT_VARIANT_Z_LATE_H => Ok(ChannelVariant::ZLateH),
        CT_VARIANT_DIRECT => Ok(ChannelVariant::Direct),
        other => Err(fail(CtStatus::InvalidArgument, format!("unknown variant code {other}"))),
    }
}

fn outcome_from(code: u32) -> Result<BellOutcome, CtStatus> {
    BellOutcome::ALL
        .get(code as usize)
        .copied()
        .ok_or_else(|| fail(CtStatus::InvalidArgument, format!("unknown outcome code {code}")))
}

fn gate_code(g: Gate) -> u8 {
    g.correction_index().map_or(u8::MAX, |i| i as u8)
}

fn correction_of(rule: Option<CorrectionRule>) -> CtCorrection {
    match rule {
        Some(r) => CtCorrection {
            ua: gate_code(r.u_on_a),
            ub: gate_code(r.u_on_b),
            cnot: r.apply_cnot,
            present: true,
        },
        None => CtCorrection {
            ua: 0,
            ub: 0,
            cnot: false,
            present: false,
        },
    }
}

unsafe fn read_input(amps: *const CtComplex) -> Result<TwoQubitInput, CtStatus> {
    if amps.is_null() {
        return Err(fail(CtStatus::NullPointer, "amplitudes pointer is null"));
    }
    let s = std::slice::from_raw_parts(amps, 4);
    let z = |c: &CtComplex| Complex64::new(c.re, c.im);
    lift(TwoQubitInput::new(z(&s[0]), z(&s[1]), z(&s[2]), z(&s[3])))
}

unsafe fn out_ref<'a, T>(p: *mut T) -> Result<&'a mut T, CtStatus> {
    p.as_mut()
        .ok_or_else(|| fail(CtStatus::NullPointer, "output pointer is null"))
}

unsafe fn trace_ref<'a>(t: *const CtTrace) -> Result<&'a CtTrace, CtStatus> {
    t.as_ref()
        .ok_or_else(|| fail(CtStatus::NullPointer, "trace handle is null"))
}

/// Runs one session. `amps` points to `a, b, c, d`. With `forced` null the
/// outcomes are sampled from `seed`; otherwise `forced` holds `n + 2`
/// outcome codes. On success `*out` owns a new trace.
///
/// # Safety
/// `amps` must point to 4 values, `forced` (if not null) to `forced_len`
/// values, and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ct_run_teleport(
    amps: *const CtComplex,
    n: u32,
    variant: u32,
    forced: *const u32,
    forced_len: usize,
    seed: u64,
    out: *mut *mut CtTrace,
) -> CtStatus {
    guard(|| {
        let out = out_ref(out)?;
        *out = ptr::null_mut();
        let input = read_input(amps)?;
        let variant = variant_from(variant)?;
        let n = n as usize;
        let modes = if forced.is_null() {
            ModePlan::sample(seed)
        } else {
            let codes = std::slice::from_raw_parts(forced, forced_len);
            let outcomes = codes.iter().map(|&c| outcome_from(c)).collect::<Result<Vec<_>, _>>()?;
            ModePlan::forced(&outcomes)
        };
        let cfg = SessionConfig::new(n, variant, modes.clone());
        let session = lift(simulate_session(&input, &cfg))?;
        let doc = TraceDocument::new(
            TraceConfig {
                n,
                variant,
                receiver: cfg.receiver,
                input: input.amplitudes(),
                modes,
                seed,
                silent: Vec::new(),
            },
            &session,
        );
        *out = Box::into_raw(Box::new(CtTrace { doc }));
        Ok(())
    })
}

/// # Safety
/// `trace` must come from `ct_run_teleport` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ct_trace_free(trace: *mut CtTrace) {
    if !trace.is_null() {
        drop(Box::from_raw(trace));
    }
}

/// # Safety
/// `trace` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ct_trace_fidelity(trace: *const CtTrace, out: *mut f64) -> CtStatus {
    guard(|| {
        *out_ref(out)? = trace_ref(trace)?.doc.fidelity;
        Ok(())
    })
}

/// # Safety
/// `trace` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ct_trace_global_phase(trace: *const CtTrace, out: *mut CtComplex) -> CtStatus {
    guard(|| {
        *out_ref(out)? = trace_ref(trace)?.doc.global_phase.into();
        Ok(())
    })
}

/// # Safety
/// `trace` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ct_trace_correction(trace: *const CtTrace, out: *mut CtCorrection) -> CtStatus {
    guard(|| {
        *out_ref(out)? = correction_of(trace_ref(trace)?.doc.correction);
        Ok(())
    })
}

/// True when the receiver applied a correction from the tables.
///
/// # Safety
/// `trace` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ct_trace_reconstructed(trace: *const CtTrace, out: *mut bool) -> CtStatus {
    guard(|| {
        *out_ref(out)? = trace_ref(trace)?.doc.status == RunStatus::Reconstructed;
        Ok(())
    })
}

/// Copies the outcome codes into `buf`. `*len` receives the count even when
/// `cap` is too small.
///
/// # Safety
/// `buf` must hold `cap` values (may be null when `cap` is 0), `len` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn ct_trace_outcomes(
    trace: *const CtTrace,
    buf: *mut u32,
    cap: usize,
    len: *mut usize,
) -> CtStatus {
    guard(|| {
        let doc = &trace_ref(trace)?.doc;
        let len = out_ref(len)?;
        *len = doc.ledger.len();
        if cap < doc.ledger.len() {
            return Err(fail(
                CtStatus::BufferTooSmall,
                format!("need room for {} outcomes", doc.ledger.len()),
            ));
        }
        if buf.is_null() && !doc.ledger.is_empty() {
            return Err(fail(CtStatus::NullPointer, "buffer is null"));
        }
        for (i, row) in doc.ledger.iter().enumerate() {
            *buf.add(i) = row.outcome.index() as u32;
        }
        Ok(())
    })
}

/// Receiver's state after correction, 4 amplitudes.
///
/// # Safety
/// `out` must point to room for 4 values.
#[no_mangle]
pub unsafe extern "C" fn ct_trace_post_state(trace: *const CtTrace, out: *mut CtComplex) -> CtStatus {
    guard(|| {
        let doc = &trace_ref(trace)?.doc;
        if out.is_null() {
            return Err(fail(CtStatus::NullPointer, "output pointer is null"));
        }
        for (i, z) in doc.post_correction.iter().enumerate() {
            *out.add(i) = (*z).into();
        }
        Ok(())
    })
}

/// The trace in the JSON schema written by the command-line tool. Release
/// with `ct_string_free`; null on failure.
///
/// # Safety
/// `trace` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn ct_trace_to_json(trace: *const CtTrace) -> *mut c_char {
    let mut result = ptr::null_mut();
    guard(|| {
        let json = trace_ref(trace)?.doc.to_json();
        result = CString::new(json)
            .map_err(|_| fail(CtStatus::InvalidArgument, "trace contains a NUL byte"))?
            .into_raw();
        Ok(())
    });
    result
}

/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ct_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Walks every branch for `n <= 6` controllers.
///
/// # Safety
/// `amps` must point to 4 values and `out` be writable.
#[no_mangle]
pub unsafe extern "C" fn ct_verify_all_branches(
    amps: *const CtComplex,
    n: u32,
    variant: u32,
    out: *mut CtVerifySummary,
) -> CtStatus {
    guard(|| {
        let out = out_ref(out)?;
        let input = read_input(amps)?;
        let r = lift(verify_all_branches(&input, n as usize, variant_from(variant)?))?;
        *out = CtVerifySummary {
            branches: r.branches as u64,
            passed: r.passed as u64,
            max_probability_deviation: r.max_probability_deviation,
            max_fidelity_deviation: r.max_fidelity_deviation,
            max_predictor_distance: r.max_predictor_distance,
            cnot_used: r.cnot_used,
            all_passed: r.all_passed(),
        };
        Ok(())
    })
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ct_efficiency(n: u32, out: *mut CtEfficiency) -> CtStatus {
    guard(|| {
        let r = efficiency_report(n as usize);
        *out_ref(out)? = CtEfficiency {
            q_u: r.q_u as u32,
            q_t: r.q_t as u32,
            b_t: r.b_t as u32,
            eta_q: r.eta_q,
            eta_t: r.eta_t,
        };
        Ok(())
    })
}

/// Table lookup. Signs are passed as bits: 0 for `+`, 1 for `−`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ct_correction_lookup(
    v_xa1: u8,
    v_total: u8,
    p_yb1: u8,
    p_total: u8,
    n: u32,
    out: *mut CtCorrection,
) -> CtStatus {
    guard(|| {
        if [v_xa1, v_total, p_yb1, p_total].iter().any(|&b| b > 1) {
            return Err(fail(CtStatus::InvalidArgument, "bits must be 0 or 1"));
        }
        let rule = correction_lookup(
            v_xa1,
            v_total,
            Sign::from_bit(p_yb1),
            Sign::from_bit(p_total),
            NParity::of(n as usize),
        );
        *out_ref(out)? = correction_of(Some(rule));
        Ok(())
    })
}

/// Sends a classical secret ("0+", "1-", "0-" or "1+") through one sampled
/// session. `*decoded` receives a static string naming the decoded message.
///
/// # Safety
/// `message` must be a NUL-terminated string and `decoded` writable.
#[no_mangle]
pub unsafe extern "C" fn ct_qss_classical(
    message: *const c_char,
    n: u32,
    seed: u64,
    decoded: *mut *const c_char,
) -> CtStatus {
    guard(|| {
        let decoded = out_ref(decoded)?;
        if message.is_null() {
            return Err(fail(CtStatus::NullPointer, "message is null"));
        }
        let text = CStr::from_ptr(message)
            .to_str()
            .map_err(|_| fail(CtStatus::InvalidArgument, "message is not UTF-8"))?;
        let msg: ClassicalMessage = lift(text.parse())?;
        let (got, _) = lift(qss_run(msg, n as usize, &ModePlan::sample(seed)))?;
        let names: [&CStr; 4] = [c"0+", c"1-", c"0-", c"1+"];
        let idx = ClassicalMessage::ALL
            .iter()
            .position(|m| *m == got)
            .expect("known message");
        *decoded = names[idx].as_ptr();
        Ok(())
    })
}

/// Message for the last failed call on this thread; empty after success.
/// Valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn ct_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

#[no_mangle]
pub extern "C" fn ct_version() -> *const c_char {
    static VERSION: &CStr = match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
        Ok(v) => v,
        Err(_) => c"",
    };
    VERSION.as_ptr()
}

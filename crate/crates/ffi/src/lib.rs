//! C ABI over `lgt-core`.
//!
//! Every fallible call returns an [`LgtStatus`]; on failure the message is
//! kept per thread and read back with [`lgt_last_error_message`]. Handles are
//! opaque and freed with their matching `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use lgt_core::ansatz::hopping_ansatz;
use lgt_core::gateset::Circuit;
use lgt_core::lgtmodel::{target_unitary_b, target_unitary_c, Variant};
use lgt_core::objective::ObjectiveHandle;
use lgt_core::optimizers::{run_trials, OptimizerSpec};
use lgt_core::qstate::StateVector;
use lgt_core::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LgtStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Validation = 3,
    Index = 4,
    Capacity = 5,
    Lowering = 6,
    UnsupportedGate = 7,
    Divergence = 8,
    NoData = 9,
    Exhausted = 10,
    Parse = 11,
    MissingArtifact = 12,
    Convergence = 13,
    Io = 14,
    BufferTooSmall = 15,
    Panic = 16,
}

impl From<&Error> for LgtStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Validation(_) => LgtStatus::Validation,
            Error::Index(_) => LgtStatus::Index,
            Error::Capacity(_) => LgtStatus::Capacity,
            Error::Lowering(_) => LgtStatus::Lowering,
            Error::UnsupportedGate(_) => LgtStatus::UnsupportedGate,
            Error::Divergence { .. } => LgtStatus::Divergence,
            Error::NoData(_) => LgtStatus::NoData,
            Error::Exhausted { .. } => LgtStatus::Exhausted,
            Error::Parse { .. } => LgtStatus::Parse,
            Error::MissingArtifact(_) => LgtStatus::MissingArtifact,
            Error::Convergence(_) => LgtStatus::Convergence,
            Error::Io(_) => LgtStatus::Io,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(status: LgtStatus, msg: impl Into<String>) -> LgtStatus {
    set_error(msg.into());
    status
}

/// Runs `f`, mapping core errors and panics onto status codes.
fn guard<F>(f: F) -> LgtStatus
where
    F: FnOnce() -> Result<(), LgtStatus>,
{
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => LgtStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => fail(LgtStatus::Panic, "panic inside lgt"),
    }
}

fn core<T>(r: lgt_core::Result<T>) -> Result<T, LgtStatus> {
    r.map_err(|e| fail(LgtStatus::from(&e), e.to_string()))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, LgtStatus> {
    if p.is_null() {
        return Err(fail(LgtStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| fail(LgtStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn slice_arg<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], LgtStatus> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(fail(LgtStatus::NullPointer, format!("{what} is null")));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn out_slice<'a>(p: *mut f64, len: usize, need: usize, what: &str) -> Result<&'a mut [f64], LgtStatus> {
    if len < need {
        return Err(fail(LgtStatus::BufferTooSmall, format!("{what} holds {len}, {need} needed")));
    }
    if p.is_null() && need > 0 {
        return Err(fail(LgtStatus::NullPointer, format!("{what} is null")));
    }
    if need == 0 {
        return Ok(&mut []);
    }
    Ok(std::slice::from_raw_parts_mut(p, need))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, LgtStatus> {
    p.as_ref().ok_or_else(|| fail(LgtStatus::NullPointer, format!("{what} is null")))
}

fn check_out<T>(p: *mut T) -> Result<(), LgtStatus> {
    if p.is_null() {
        Err(fail(LgtStatus::NullPointer, "output pointer is null"))
    } else {
        Ok(())
    }
}

/// Message of the last failed call on this thread, or null. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn lgt_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

#[no_mangle]
pub extern "C" fn lgt_clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn lgt_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn lgt_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Statevector over `n` qubits, qubit 0 least significant.
pub struct LgtState(StateVector);

/// Circuit, possibly with free parameter slots.
pub struct LgtCircuit(Circuit);

/// Fidelity cost of a template against a fixed target unitary.
pub struct LgtObjective(ObjectiveHandle);

/// # Safety
/// `out` must be a valid pointer to write a handle into.
#[no_mangle]
pub unsafe extern "C" fn lgt_state_new(n_qubits: usize, out: *mut *mut LgtState) -> LgtStatus {
    guard(|| {
        check_out(out)?;
        let s = core(StateVector::zero(n_qubits))?;
        *out = Box::into_raw(Box::new(LgtState(s)));
        Ok(())
    })
}

/// # Safety
/// `state` must be null or a live handle from [`lgt_state_new`].
#[no_mangle]
pub unsafe extern "C" fn lgt_state_free(state: *mut LgtState) {
    if !state.is_null() {
        drop(Box::from_raw(state));
    }
}

/// # Safety
/// `state` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn lgt_state_n_qubits(state: *const LgtState) -> usize {
    state.as_ref().map_or(0, |s| s.0.n_qubits())
}

/// Writes the `2^n` outcome probabilities.
///
/// # Safety
/// `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn lgt_state_probabilities(state: *const LgtState, out: *mut f64, len: usize) -> LgtStatus {
    guard(|| {
        let s = handle(state, "state")?;
        let p = s.0.probabilities();
        out_slice(out, len, p.len(), "probability buffer")?.copy_from_slice(&p);
        Ok(())
    })
}

/// Parses the line-based circuit text format.
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lgt_circuit_from_text(text: *const c_char, out: *mut *mut LgtCircuit) -> LgtStatus {
    guard(|| {
        check_out(out)?;
        let c = core(Circuit::from_text(str_arg(text, "text")?))?;
        *out = Box::into_raw(Box::new(LgtCircuit(c)));
        Ok(())
    })
}

/// The 30-parameter hopping template.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lgt_circuit_hopping_template(out: *mut *mut LgtCircuit) -> LgtStatus {
    guard(|| {
        check_out(out)?;
        *out = Box::into_raw(Box::new(LgtCircuit(hopping_ansatz())));
        Ok(())
    })
}

/// # Safety
/// `circuit` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn lgt_circuit_free(circuit: *mut LgtCircuit) {
    if !circuit.is_null() {
        drop(Box::from_raw(circuit));
    }
}

/// Text form; free with [`lgt_string_free`]. Null on error.
///
/// # Safety
/// `circuit` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn lgt_circuit_to_text(circuit: *const LgtCircuit) -> *mut c_char {
    match circuit.as_ref() {
        Some(c) => CString::new(c.0.to_text()).map_or(ptr::null_mut(), CString::into_raw),
        None => {
            set_error("circuit is null".into());
            ptr::null_mut()
        }
    }
}

/// # Safety
/// `circuit` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn lgt_circuit_n_qubits(circuit: *const LgtCircuit) -> usize {
    circuit.as_ref().map_or(0, |c| c.0.n_qubits)
}

/// # Safety
/// `circuit` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn lgt_circuit_n_params(circuit: *const LgtCircuit) -> usize {
    circuit.as_ref().map_or(0, |c| c.0.n_params())
}

/// # Safety
/// `circuit` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn lgt_circuit_two_qubit_count(circuit: *const LgtCircuit) -> usize {
    circuit.as_ref().map_or(0, |c| c.0.two_qubit_count())
}

/// Binds `params` and applies the circuit to `state` in place.
///
/// # Safety
/// Handles must be live; `params` must hold `n_params` doubles.
#[no_mangle]
pub unsafe extern "C" fn lgt_circuit_apply(
    circuit: *const LgtCircuit,
    params: *const f64,
    n_params: usize,
    state: *mut LgtState,
) -> LgtStatus {
    guard(|| {
        let c = handle(circuit, "circuit")?;
        let x = slice_arg(params, n_params, "params")?;
        let s = state.as_mut().ok_or_else(|| fail(LgtStatus::NullPointer, "state is null"))?;
        let bound = core(c.0.bind(x))?;
        core(bound.apply_to(&mut s.0))
    })
}

/// Objective of `template` against the hopping block `Ĉ(J, dt)`.
///
/// # Safety
/// `template` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lgt_objective_hopping(
    j: f64,
    dt: f64,
    template: *const LgtCircuit,
    out: *mut *mut LgtObjective,
) -> LgtStatus {
    guard(|| {
        check_out(out)?;
        let t = handle(template, "template")?;
        let h = core(ObjectiveHandle::new(target_unitary_c(j, dt), t.0.clone()))?;
        *out = Box::into_raw(Box::new(LgtObjective(h)));
        Ok(())
    })
}

/// Objective of `template` against the bond block `B̂(U, dt)`.
///
/// # Safety
/// `template` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lgt_objective_bond(
    u: f64,
    dt: f64,
    template: *const LgtCircuit,
    out: *mut *mut LgtObjective,
) -> LgtStatus {
    guard(|| {
        check_out(out)?;
        let t = handle(template, "template")?;
        let h = core(ObjectiveHandle::new(target_unitary_b(u, dt), t.0.clone()))?;
        *out = Box::into_raw(Box::new(LgtObjective(h)));
        Ok(())
    })
}

/// # Safety
/// `objective` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn lgt_objective_free(objective: *mut LgtObjective) {
    if !objective.is_null() {
        drop(Box::from_raw(objective));
    }
}

/// # Safety
/// `objective` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn lgt_objective_dim(objective: *const LgtObjective) -> usize {
    objective.as_ref().map_or(0, |o| o.0.ansatz().n_params())
}

/// `1 − F` at `x`.
///
/// # Safety
/// `x` must hold `d` doubles; `cost` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lgt_objective_cost(
    objective: *const LgtObjective,
    x: *const f64,
    d: usize,
    cost: *mut f64,
) -> LgtStatus {
    guard(|| {
        let o = handle(objective, "objective")?;
        check_out(cost)?;
        *cost = core(o.0.cost(slice_arg(x, d, "x")?))?;
        Ok(())
    })
}

/// Exact gradient at `x`, written to `grad[0..d]`.
///
/// # Safety
/// `x` and `grad` must hold `d` doubles.
#[no_mangle]
pub unsafe extern "C" fn lgt_objective_gradient(
    objective: *const LgtObjective,
    x: *const f64,
    d: usize,
    grad: *mut f64,
) -> LgtStatus {
    guard(|| {
        let o = handle(objective, "objective")?;
        let g = core(o.0.gradient(slice_arg(x, d, "x")?))?;
        out_slice(grad, d, g.len(), "gradient buffer")?.copy_from_slice(&g);
        Ok(())
    })
}

/// Seeded multi-start optimization; writes the best point and its cost.
/// `optimizer` is one of `ipg`, `gd`, `adam`, `lbfgs`.
///
/// # Safety
/// Strings NUL-terminated; `best_x` must hold `d` doubles.
#[no_mangle]
pub unsafe extern "C" fn lgt_optimize(
    objective: *const LgtObjective,
    optimizer: *const c_char,
    trials: usize,
    iterations: usize,
    seed: u64,
    best_x: *mut f64,
    d: usize,
    best_cost: *mut f64,
) -> LgtStatus {
    guard(|| {
        let o = handle(objective, "objective")?;
        let spec: OptimizerSpec = core(str_arg(optimizer, "optimizer")?.parse())?;
        check_out(best_cost)?;
        let set = core(run_trials(&spec, &o.0, trials, iterations, seed))?;
        let best = set.best_record();
        out_slice(best_x, d, best.x.len(), "best_x buffer")?.copy_from_slice(&best.x);
        *best_cost = best.final_cost();
        Ok(())
    })
}

/// Two-qubit gates per Trotter step for `variant` (`direct`, `gbo`,
/// `vne`) at `n_sites`.
///
/// # Safety
/// `variant` NUL-terminated; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn lgt_gate_cost(variant: *const c_char, n_sites: usize, out: *mut usize) -> LgtStatus {
    guard(|| {
        check_out(out)?;
        let v: Variant = core(str_arg(variant, "variant")?.parse())?;
        *out = v.two_qubit_cost(n_sites);
        Ok(())
    })
}

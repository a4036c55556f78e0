//! C ABI over `kclust`.
//!
//! Instances and fractional solutions are opaque handles created and freed
//! here. Every function returns a [`KcStatus`]; on failure the message is
//! available from [`kc_last_error_message`] on the same thread. Strings
//! handed out by this library must be released with [`kc_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use kclust::cost::fractional_cost;
use kclust::harness::{run_pipeline, ExperimentConfig};
use kclust::lmp::lmp_round;
use kclust::lp::{nearest_mass_sets, solve_relaxation, DEFAULT_ACCURACY};
use kclust::graph::SourceOrder;
use kclust::reduction::brute_force_opt;
use kclust::rng::{stream, tag};
use kclust::{Error, FractionalSolution, Instance};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KcStatus {
    Ok = 0,
    /// An algorithm guarantee or a solution constraint failed.
    Invariant = 1,
    /// Malformed input, bad configuration, or an I/O or parse failure.
    Config = 2,
    /// Infeasible instance, size limit, or LP solver failure.
    Infeasible = 3,
    NullArgument = 4,
    Panic = 5,
    /// An output buffer was too small; the required length is still reported.
    BufferTooSmall = 6,
}

/// Opaque instance handle.
pub struct KcInstance(Instance);

/// Opaque LP solution handle, tied to the instance it was solved for.
pub struct KcFractional {
    sol: FractionalSolution,
    objective: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> KcStatus {
    match e.exit_code() {
        1 => KcStatus::Invariant,
        2 => KcStatus::Config,
        _ => KcStatus::Infeasible,
    }
}

/// Runs `f`, recording any error or panic.
fn guard<F: FnOnce() -> Result<(), (KcStatus, String)>>(f: F) -> KcStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => KcStatus::Ok,
        Ok(Err((status, msg))) => {
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
            KcStatus::Panic
        }
    }
}

fn lib(e: Error) -> (KcStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(name: &str) -> (KcStatus, String) {
    (KcStatus::NullArgument, format!("{name} is null"))
}

unsafe fn deref<'a, T>(p: *const T, name: &str) -> Result<&'a T, (KcStatus, String)> {
    p.as_ref().ok_or_else(|| null(name))
}

/// Writes `values` into `out[..cap]` and the full length into `*len`.
unsafe fn write_indices(values: &[usize], out: *mut usize, cap: usize, len: *mut usize) -> Result<(), (KcStatus, String)> {
    if len.is_null() {
        return Err(null("len"));
    }
    *len = values.len();
    if values.len() > cap {
        return Err((KcStatus::BufferTooSmall, format!("need room for {} entries, got {cap}", values.len())));
    }
    if !values.is_empty() {
        if out.is_null() {
            return Err(null("out"));
        }
        ptr::copy_nonoverlapping(values.as_ptr(), out, values.len());
    }
    Ok(())
}

fn into_c_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).unwrap_or_default().into_raw()
}

/// Parses an instance from its JSON form.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn kc_instance_from_json(json: *const c_char, out: *mut *mut KcInstance) -> KcStatus {
    guard(|| {
        if json.is_null() {
            return Err(null("json"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let text = CStr::from_ptr(json).to_str().map_err(|e| (KcStatus::Config, format!("json is not UTF-8: {e}")))?;
        let inst = Instance::from_json(text).map_err(lib)?;
        *out = Box::into_raw(Box::new(KcInstance(inst)));
        Ok(())
    })
}

/// # Safety
/// `inst` must come from `kc_instance_from_json` and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn kc_instance_free(inst: *mut KcInstance) {
    if !inst.is_null() {
        drop(Box::from_raw(inst));
    }
}

/// Client count, facility count and k.
///
/// # Safety
/// `inst` must be a live handle; output pointers may be null.
#[no_mangle]
pub unsafe extern "C" fn kc_instance_shape(
    inst: *const KcInstance,
    n_clients: *mut usize,
    n_facilities: *mut usize,
    k: *mut usize,
) -> KcStatus {
    guard(|| {
        let inst = &deref(inst, "inst")?.0;
        for (p, v) in [(n_clients, inst.n_clients()), (n_facilities, inst.n_facilities()), (k, inst.k())] {
            if !p.is_null() {
                *p = v;
            }
        }
        Ok(())
    })
}

/// Solves the LP relaxation.
///
/// # Safety
/// `inst` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn kc_solve_lp(inst: *const KcInstance, out: *mut *mut KcFractional) -> KcStatus {
    guard(|| {
        let inst = &deref(inst, "inst")?.0;
        if out.is_null() {
            return Err(null("out"));
        }
        let sol = solve_relaxation(inst, DEFAULT_ACCURACY).map_err(lib)?;
        let objective = fractional_cost(inst, &sol).map_err(lib)?;
        *out = Box::into_raw(Box::new(KcFractional { sol, objective }));
        Ok(())
    })
}

/// # Safety
/// `frac` must come from `kc_solve_lp` and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn kc_fractional_free(frac: *mut KcFractional) {
    if !frac.is_null() {
        drop(Box::from_raw(frac));
    }
}

/// Copies the opening vector into `y[..cap]`; `*len` receives its length.
///
/// # Safety
/// `frac` must be a live handle; `y` must hold `cap` doubles.
#[no_mangle]
pub unsafe extern "C" fn kc_fractional_opening(
    frac: *const KcFractional,
    y: *mut f64,
    cap: usize,
    len: *mut usize,
    objective: *mut f64,
) -> KcStatus {
    guard(|| {
        let frac = deref(frac, "frac")?;
        if !objective.is_null() {
            *objective = frac.objective;
        }
        if len.is_null() {
            return Err(null("len"));
        }
        let v = &frac.sol.y;
        *len = v.len();
        if v.len() > cap {
            return Err((KcStatus::BufferTooSmall, format!("need room for {} entries, got {cap}", v.len())));
        }
        if y.is_null() {
            return Err(null("y"));
        }
        ptr::copy_nonoverlapping(v.as_ptr(), y, v.len());
        Ok(())
    })
}

/// One LMP rounding of `frac`; writes the open facilities of `inst`.
///
/// # Safety
/// Handles must be live and `frac` solved for `inst`; `open` must hold `cap` entries.
#[no_mangle]
pub unsafe extern "C" fn kc_lmp_round(
    inst: *const KcInstance,
    frac: *const KcFractional,
    seed: u64,
    open: *mut usize,
    cap: usize,
    len: *mut usize,
) -> KcStatus {
    guard(|| {
        let inst = &deref(inst, "inst")?.0;
        let frac = deref(frac, "frac")?;
        if frac.sol.y.len() != inst.n_facilities() {
            return Err((KcStatus::Config, "solution does not belong to this instance".into()));
        }
        let nm = nearest_mass_sets(inst, &frac.sol.y).map_err(lib)?;
        let order = SourceOrder::new(&nm.instance);
        let entries = lmp_round(&nm.y, &order, &mut stream(seed, tag::LMP, 0)).map_err(lib)?;
        let mut facilities = nm.map.to_original(&entries);
        facilities.sort_unstable();
        facilities.dedup();
        write_indices(&facilities, open, cap, len)
    })
}

/// Exact optimum by enumeration; fails with `Infeasible` above the size limit.
///
/// # Safety
/// `inst` must be a live handle; `open` must hold `cap` entries.
#[no_mangle]
pub unsafe extern "C" fn kc_brute_force(
    inst: *const KcInstance,
    open: *mut usize,
    cap: usize,
    len: *mut usize,
    cost: *mut f64,
) -> KcStatus {
    guard(|| {
        let inst = &deref(inst, "inst")?.0;
        let opt = brute_force_opt(inst).map_err(lib)?;
        if !cost.is_null() {
            *cost = opt.total_cost;
        }
        write_indices(&opt.open, open, cap, len)
    })
}

/// Full pipeline with default configuration; `*report` receives the JSON report.
///
/// # Safety
/// `inst` must be a live handle; `report` must be writable. Free the string
/// with `kc_string_free`.
#[no_mangle]
pub unsafe extern "C" fn kc_pipeline(inst: *const KcInstance, trials: usize, seed: u64, report: *mut *mut c_char) -> KcStatus {
    guard(|| {
        let inst = &deref(inst, "inst")?.0;
        if report.is_null() {
            return Err(null("report"));
        }
        let mut cfg = ExperimentConfig::new(inst.p()).map_err(lib)?;
        cfg.trials = trials;
        cfg.seed = seed;
        let out = run_pipeline(inst, &cfg).map_err(lib)?;
        let text = serde_json::to_string(&out).map_err(|e| lib(e.into()))?;
        *report = into_c_string(text);
        Ok(())
    })
}

/// Message of the last failure on this thread, or null. Free with `kc_string_free`.
#[no_mangle]
pub extern "C" fn kc_last_error_message() -> *mut c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null_mut(), |c| c.clone().into_raw()))
}

/// # Safety
/// `s` must be null or a string returned by this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn kc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn status_follows_error_category() {
        assert_eq!(status_of(&Error::Invariant("x".into())), KcStatus::Invariant);
        assert_eq!(status_of(&Error::Input("x".into()).in_stage("lp")), KcStatus::Config);
        assert_eq!(status_of(&Error::Size("x".into())), KcStatus::Infeasible);
    }

    #[test]
    fn panics_become_status() {
        assert_eq!(guard(|| panic!("boom")), KcStatus::Panic);
        let msg = kc_last_error_message();
        let text = unsafe { CStr::from_ptr(msg) }.to_str().unwrap().to_owned();
        unsafe { kc_string_free(msg) };
        assert_eq!(text, "panic: boom");
        assert_eq!(guard(|| Ok(())), KcStatus::Ok);
        assert!(kc_last_error_message().is_null());
    }
}

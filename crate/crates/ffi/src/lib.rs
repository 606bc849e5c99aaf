//! C ABI for the auction diagnostics library.
//!
//! Instances are opaque handles created from the JSON instance format;
//! results come back as JSON strings owned by this library (release them
//! with `aic_string_free`). Every fallible call returns an `AicStatus`;
//! on failure `aic_last_error_message` retrieves a description for the
//! calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::ptr;

use auction_ic::metrics::{mechanism_from_tag, verify_theorems};
use auction_ic::InstanceFile;

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let cstring = CString::new(msg.replace('\0', " "))
        .unwrap_or_else(|_| CString::new("invalid error message").unwrap());
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(cstring));
}

/// Result codes for every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AicStatus {
    AicOk = 0,
    /// A required pointer argument was null.
    AicNullPointer = 1,
    /// A string argument was not valid UTF-8.
    AicInvalidUtf8 = 2,
    /// The instance JSON could not be parsed.
    AicParseError = 3,
    /// The instance or mechanism tag was rejected.
    AicInvalidInput = 4,
    /// The computation itself failed.
    AicRuntimeError = 5,
}

/// Opaque auction instance handle.
pub struct AicInstance(InstanceFile);

unsafe fn read_str<'a>(ptr: *const c_char) -> Result<&'a str, AicStatus> {
    if ptr.is_null() {
        set_error("null string argument".into());
        return Err(AicStatus::AicNullPointer);
    }
    unsafe { CStr::from_ptr(ptr) }.to_str().map_err(|_| {
        set_error("string argument is not valid UTF-8".into());
        AicStatus::AicInvalidUtf8
    })
}

fn export_string(s: String, out: *mut *mut c_char) -> AicStatus {
    match CString::new(s) {
        Ok(c) => {
            unsafe { *out = c.into_raw() };
            AicStatus::AicOk
        }
        Err(_) => {
            set_error("result contained an interior NUL byte".into());
            AicStatus::AicRuntimeError
        }
    }
}

/// Parse an instance from its JSON representation. On success `*out` owns
/// the handle; release it with `aic_instance_free`.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn aic_instance_from_json(
    json: *const c_char,
    out: *mut *mut AicInstance,
) -> AicStatus {
    if out.is_null() {
        set_error("null output pointer".into());
        return AicStatus::AicNullPointer;
    }
    unsafe { *out = ptr::null_mut() };
    let text = match unsafe { read_str(json) } {
        Ok(t) => t,
        Err(status) => return status,
    };
    let file: InstanceFile = match serde_json::from_str(text) {
        Ok(f) => f,
        Err(e) => {
            set_error(format!("instance JSON: {e}"));
            return AicStatus::AicParseError;
        }
    };
    // Validate eagerly so `run` cannot fail on a malformed handle.
    if let Err(e) = file.to_adtypes() {
        set_error(format!("instance: {e}"));
        return AicStatus::AicInvalidInput;
    }
    unsafe { *out = Box::into_raw(Box::new(AicInstance(file))) };
    AicStatus::AicOk
}

/// Release an instance handle. Null is a no-op.
///
/// # Safety
/// `inst` must come from `aic_instance_from_json` and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn aic_instance_free(inst: *mut AicInstance) {
    if !inst.is_null() {
        drop(unsafe { Box::from_raw(inst) });
    }
}

fn with_mechanism<T>(
    inst: *const AicInstance,
    mechanism: *const c_char,
    f: impl FnOnce(&dyn auction_ic::metrics::Mechanism) -> auction_ic::Result<T>,
) -> Result<T, AicStatus> {
    if inst.is_null() {
        set_error("null instance handle".into());
        return Err(AicStatus::AicNullPointer);
    }
    let tag = unsafe { read_str(mechanism) }?;
    let file = unsafe { &(*inst).0 };
    let mech = mechanism_from_tag(file, tag).map_err(|e| {
        set_error(e.to_string());
        AicStatus::AicInvalidInput
    })?;
    f(&*mech).map_err(|e| {
        set_error(e.to_string());
        AicStatus::AicRuntimeError
    })
}

/// Run the auction under the given mechanism tag (vcg | gsp | gfp |
/// extended-gsp | greedy-gsp | greedy-externality) and return the outcome
/// as JSON in `*out_json` (free with `aic_string_free`).
///
/// # Safety
/// `inst` must be a live handle; `mechanism` NUL-terminated; `out_json` valid.
#[no_mangle]
pub unsafe extern "C" fn aic_run(
    inst: *const AicInstance,
    mechanism: *const c_char,
    out_json: *mut *mut c_char,
) -> AicStatus {
    if out_json.is_null() {
        set_error("null output pointer".into());
        return AicStatus::AicNullPointer;
    }
    unsafe { *out_json = ptr::null_mut() };
    let json = with_mechanism(inst, mechanism, |mech| {
        let outcome = mech.run(mech.bids())?;
        Ok(serde_json::to_string(&outcome)?)
    });
    match json {
        Ok(j) => export_string(j, out_json),
        Err(status) => status,
    }
}

/// Compute the full diagnostics report as JSON. `*envy_dominates` is set to
/// 1 when every bidder's envy bounds its regret, 0 otherwise.
///
/// # Safety
/// Same contract as `aic_run`; `envy_dominates` may be null if unwanted.
#[no_mangle]
pub unsafe extern "C" fn aic_check(
    inst: *const AicInstance,
    mechanism: *const c_char,
    out_json: *mut *mut c_char,
    envy_dominates: *mut c_int,
) -> AicStatus {
    if out_json.is_null() {
        set_error("null output pointer".into());
        return AicStatus::AicNullPointer;
    }
    unsafe { *out_json = ptr::null_mut() };
    let result = with_mechanism(inst, mechanism, |mech| {
        let report = verify_theorems(mech)?;
        Ok((serde_json::to_string(&report)?, report.envy_dominates_regret))
    });
    match result {
        Ok((json, dominates)) => {
            if !envy_dominates.is_null() {
                unsafe { *envy_dominates = dominates as c_int };
            }
            export_string(json, out_json)
        }
        Err(status) => status,
    }
}

/// Release a string returned by this library. Null is a no-op.
///
/// # Safety
/// `s` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn aic_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(unsafe { CString::from_raw(s) });
    }
}

/// Copy the calling thread's last error message (NUL-terminated, truncated
/// to `len` bytes) into `buf`. Returns the full message length in bytes,
/// excluding the NUL; 0 when no error is recorded.
///
/// # Safety
/// `buf` must point to at least `len` writable bytes (or be null with len 0).
#[no_mangle]
pub unsafe extern "C" fn aic_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let guard = e.borrow();
        let Some(msg) = guard.as_ref() else {
            return 0;
        };
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            unsafe {
                ptr::copy_nonoverlapping(bytes.as_ptr(), buf.cast(), n);
                *buf.add(n) = 0;
            }
        }
        bytes.len()
    })
}

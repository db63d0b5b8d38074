//! C ABI for the dayflow library.
//!
//! Conventions:
//! - Every fallible call returns a [`DfStatus`]; `DF_STATUS_OK` is zero.
//! - On failure, a thread-local message is readable through
//!   [`df_last_error_message`] until the next failing call on the same
//!   thread.
//! - Groups are opaque handles created by [`df_group_parse`] and released
//!   by [`df_group_free`].
//! - Strings returned through out-parameters are NUL-terminated, owned by
//!   the caller, and must be released with [`df_string_free`].
//!
//! The committed header `include/dayflow.h` is generated from this file
//! by the build script and stays in sync with it.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;

use dayflow::solver::max_defect;
use dayflow::{
    defect_profile, folner_uniform, solve_invariant_mean, DefectKind, Error, GroupSpec,
    SolveConfig,
};
use serde_json::json;

/// Status code of every fallible call. Zero means success; everything
/// else leaves a message for [`df_last_error_message`].
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum DfStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// Malformed input: unknown group kind, bad JSON, bad parameters.
    InvalidArgument = 3,
    /// The operation is undefined for this group kind.
    Unsupported = 4,
    /// An enumeration or size cap was exceeded.
    ResourceLimit = 5,
    /// A precondition on the inputs failed.
    Precondition = 6,
    /// The solver could not reach an optimal basis.
    Solver = 7,
    /// An internal invariant failed (including caught panics).
    Internal = 8,
}

/// An opaque group handle: a parsed, validated group description.
pub struct DfGroup {
    spec: Arc<GroupSpec>,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn fail(status: DfStatus, message: &str) -> DfStatus {
    let sanitized: String = message.chars().filter(|&c| c != '\0').collect();
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
    status
}

fn fail_with(e: &Error) -> DfStatus {
    let status = match e {
        Error::InvalidArgument(_) => DfStatus::InvalidArgument,
        Error::UnsupportedOperation(_) => DfStatus::Unsupported,
        Error::ResourceLimit(_) => DfStatus::ResourceLimit,
        Error::Precondition(_) => DfStatus::Precondition,
        Error::Solver(_) => DfStatus::Solver,
        Error::Internal(_) => DfStatus::Internal,
    };
    fail(status, &e.to_string())
}

/// Run a fallible body behind a panic guard: a panic must not cross the
/// C boundary, so it degrades to `Internal`.
fn guarded(body: impl FnOnce() -> Result<(), DfStatus>) -> DfStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => DfStatus::Ok,
        Ok(Err(status)) => status,
        Err(_) => fail(DfStatus::Internal, "caught a panic at the C boundary"),
    }
}

/// # Safety
/// `ptr` must be null or a valid NUL-terminated string.
unsafe fn read_str<'a>(ptr: *const c_char) -> Result<&'a str, DfStatus> {
    if ptr.is_null() {
        return Err(fail(DfStatus::NullPointer, "string argument is null"));
    }
    unsafe { CStr::from_ptr(ptr) }
        .to_str()
        .map_err(|_| fail(DfStatus::InvalidUtf8, "string argument is not valid UTF-8"))
}

unsafe fn read_group<'a>(ptr: *const DfGroup) -> Result<&'a DfGroup, DfStatus> {
    if ptr.is_null() {
        return Err(fail(DfStatus::NullPointer, "group handle is null"));
    }
    Ok(unsafe { &*ptr })
}

/// Reject a null out-pointer up front, before any work happens and
/// before anything is leaked into a raw pointer.
fn check_out<T>(out: *mut T, what: &str) -> Result<(), DfStatus> {
    if out.is_null() {
        return Err(fail(DfStatus::NullPointer, &format!("{what} out-pointer is null")));
    }
    Ok(())
}

fn write_out<T>(out: *mut T, value: T, what: &str) -> Result<(), DfStatus> {
    check_out(out, what)?;
    unsafe { out.write(value) };
    Ok(())
}

fn export_string(s: String, out: *mut *mut c_char, what: &str) -> Result<(), DfStatus> {
    check_out(out, what)?;
    let c = CString::new(s)
        .map_err(|_| fail(DfStatus::Internal, "produced a string with an interior NUL"))?;
    write_out(out, c.into_raw(), what)
}

/// The library version as a static NUL-terminated string. Never null;
/// do not free.
#[no_mangle]
pub extern "C" fn df_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// The message of the most recent failure on this thread, as a
/// NUL-terminated string. Valid until the next failing call on the same
/// thread; never null; do not free.
#[no_mangle]
pub extern "C" fn df_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Parse a group description, e.g. `{"kind": "zd", "d": 2}` or
/// `{"kind": "free_group", "rank": 2}`, into a fresh handle written to
/// `*out`. The handle must be released with [`df_group_free`].
///
/// # Safety
/// `json` must be null or a valid NUL-terminated string, and `out` must
/// be null or valid for a single pointer write.
#[no_mangle]
pub unsafe extern "C" fn df_group_parse(
    json: *const c_char,
    out: *mut *mut DfGroup,
) -> DfStatus {
    guarded(|| {
        check_out(out, "group")?;
        let text = unsafe { read_str(json) }?;
        let value: serde_json::Value = serde_json::from_str(text)
            .map_err(|e| fail(DfStatus::InvalidArgument, &format!("bad JSON: {e}")))?;
        let spec = GroupSpec::from_json(&value).map_err(|e| fail_with(&e))?;
        let handle = Box::new(DfGroup { spec: Arc::new(spec) });
        write_out(out, Box::into_raw(handle), "group")
    })
}

/// Release a group handle. Null is a no-op.
///
/// # Safety
/// `group` must be null or a pointer obtained from [`df_group_parse`]
/// that has not been freed yet.
#[no_mangle]
pub unsafe extern "C" fn df_group_free(group: *mut DfGroup) {
    if !group.is_null() {
        drop(unsafe { Box::from_raw(group) });
    }
}

/// Write the group's display label (e.g. `zd:2`) to `*out` as a fresh
/// string owned by the caller.
///
/// # Safety
/// `group` must be a valid handle; `out` must be null or valid for a
/// single pointer write.
#[no_mangle]
pub unsafe extern "C" fn df_group_label(
    group: *const DfGroup,
    out: *mut *mut c_char,
) -> DfStatus {
    guarded(|| {
        let group = unsafe { read_group(group) }?;
        export_string(group.spec.to_string(), out, "label")
    })
}

/// Write the number of elements within word-metric distance `radius` of
/// the identity to `*out`.
///
/// # Safety
/// `group` must be a valid handle; `out` must be null or valid for a
/// single `uint64_t` write.
#[no_mangle]
pub unsafe extern "C" fn df_ball_size(
    group: *const DfGroup,
    radius: u32,
    out: *mut u64,
) -> DfStatus {
    guarded(|| {
        let group = unsafe { read_group(group) }?;
        let ball = group.spec.ball(radius).map_err(|e| fail_with(&e))?;
        write_out(out, ball.len() as u64, "ball size")
    })
}

/// Write the worst per-generator total-variation defect of the uniform
/// mean on the radius-`radius` ball to `*out`.
///
/// # Safety
/// `group` must be a valid handle; `out` must be null or valid for a
/// single `double` write.
#[no_mangle]
pub unsafe extern "C" fn df_folner_defect(
    group: *const DfGroup,
    radius: u32,
    out: *mut f64,
) -> DfStatus {
    guarded(|| {
        let group = unsafe { read_group(group) }?;
        let mu = folner_uniform(&group.spec, radius).map_err(|e| fail_with(&e))?;
        let defect =
            max_defect(&mu, group.spec.generators(), &DefectKind::Tv).map_err(|e| fail_with(&e))?;
        write_out(out, defect, "defect")
    })
}

/// Minimize the worst per-generator total-variation defect over means
/// supported on the radius-`radius` ball and write a JSON report to
/// `*out_json`: `{"group", "radius", "kind", "max_defect", "lp_status",
/// "measure", "generator_defects"}`. The string is owned by the caller.
///
/// # Safety
/// `group` must be a valid handle; `out_json` must be null or valid for
/// a single pointer write.
#[no_mangle]
pub unsafe extern "C" fn df_solve_tv(
    group: *const DfGroup,
    radius: u32,
    out_json: *mut *mut c_char,
) -> DfStatus {
    guarded(|| {
        check_out(out_json, "report")?;
        let group = unsafe { read_group(group) }?;
        let report = solve_invariant_mean(&group.spec, &SolveConfig::new(radius, DefectKind::Tv))
            .map_err(|e| fail_with(&e))?;
        let mut defects = Vec::with_capacity(report.generator_defects.len());
        for (s, d) in &report.generator_defects {
            let element = group.spec.element_to_json(s).map_err(|e| fail_with(&e))?;
            defects.push(json!({ "generator": element, "defect": d }));
        }
        let measure = report.measure.to_json(None).map_err(|e| fail_with(&e))?;
        let value = json!({
            "group": group.spec.to_string(),
            "radius": radius,
            "kind": "tv",
            "max_defect": report.max_defect,
            "lp_status": report.status.to_string(),
            "measure": measure,
            "generator_defects": defects,
        });
        export_string(value.to_string(), out_json, "report")
    })
}

/// Compute the defect profile for radii `0..=max_radius` and write it to
/// `*out_csv` as CSV with header
/// `r,group,kind,folner_defect,lp_defect,lp_status,millis`. The string
/// is owned by the caller.
///
/// # Safety
/// `group` must be a valid handle; `out_csv` must be null or valid for a
/// single pointer write.
#[no_mangle]
pub unsafe extern "C" fn df_defect_profile_csv(
    group: *const DfGroup,
    max_radius: u32,
    out_csv: *mut *mut c_char,
) -> DfStatus {
    guarded(|| {
        check_out(out_csv, "profile")?;
        let group = unsafe { read_group(group) }?;
        let rows =
            defect_profile(&group.spec, max_radius, &DefectKind::Tv).map_err(|e| fail_with(&e))?;
        let mut csv = String::from("r,group,kind,folner_defect,lp_defect,lp_status,millis\n");
        let label = csv_field(&group.spec.to_string());
        for row in &rows {
            csv.push_str(&format!(
                "{},{},tv,{:.16e},{:.16e},{},{}\n",
                row.radius,
                label,
                row.folner_defect,
                row.lp_defect,
                row.status,
                row.wall.as_millis(),
            ));
        }
        export_string(csv, out_csv, "profile")
    })
}

/// Release a string obtained from any `df_` out-parameter. Null is a
/// no-op.
///
/// # Safety
/// `s` must be null or a string pointer obtained from this library that
/// has not been freed yet.
#[no_mangle]
pub unsafe extern "C" fn df_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(unsafe { CString::from_raw(s) });
    }
}

/// Quote a CSV field when it contains a comma or a quote (labels of
/// product groups contain commas).
fn csv_field(raw: &str) -> String {
    if raw.contains(',') || raw.contains('"') {
        format!("\"{}\"", raw.replace('"', "\"\""))
    } else {
        raw.to_string()
    }
}

//! C ABI over `ergokit`.
//!
//! Fallible functions return an [`ErgoStatus`] and write results through out
//! pointers; on failure the message is kept per thread and read with
//! [`ergo_last_error`]. Handles are opaque and released by the matching
//! `_free` function. Strings handed to the caller are released with
//! [`ergo_string_free`]. No function unwinds across the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use ergokit::ingest::{parse_recording, read_recording, AnalysisWindow, ParseOptions, Recording};
use ergokit::metrics::{quat_distance, score, ComfortLevel, MetricSense, Thresholds};
use ergokit::report::session_aggregates;
use ergokit::skeleton::{validate_skeleton, SkeletonDescriptor};
use ergokit::stats::{polar_polygon_area, reduction_percent};
use ergokit::teleop::{
    cop_step, CopMapperParams, MapperCommand, MapperState, MouseConfig, MouseMapper, RawMouseSample,
};
use ergokit::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErgoStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    /// Malformed recording text.
    Parse = 3,
    /// Argument outside the operation's domain.
    Contract = 4,
    /// Invalid skeleton or mapper configuration.
    Config = 5,
    Data = 6,
    Io = 7,
    /// Internal panic caught at the boundary.
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErgoLevel {
    Comfortable = 0,
    Caution = 1,
    Uncomfortable = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErgoSense {
    /// Larger is better.
    Comfort = 0,
    /// Larger is worse.
    Divergence = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErgoCommandKind {
    Displacement = 0,
    Twist = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ErgoMouseSample {
    pub t: f64,
    pub dp_raw: [f64; 3],
    pub de_raw: [f64; 3],
    pub left_button: bool,
    pub right_button: bool,
}

/// Mapper output. Displacements fill all six slots; twists use slot 0
/// (vx), 1 (vy) and 5 (wz).
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErgoCommand {
    pub kind: ErgoCommandKind,
    pub axes: [f64; 6],
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ErgoTwist {
    pub vx: f64,
    pub vy: f64,
    pub wz: f64,
}

pub struct ErgoSkeleton(SkeletonDescriptor);

pub struct ErgoRecording(Recording);

pub struct ErgoMouseMapper(MouseMapper);

pub struct ErgoCopMapper {
    params: CopMapperParams,
    state: MapperState,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

enum Failure {
    Null(&'static str),
    Utf8(&'static str),
    Contract(String),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn lib_status(e: &Error) -> ErgoStatus {
    match e {
        Error::Parse { .. }
        | Error::NonMonotone { .. }
        | Error::UnknownJoint { .. }
        | Error::UnknownLink { .. }
        | Error::NonUnitQuaternion { .. } => ErgoStatus::Parse,
        Error::Contract(_) => ErgoStatus::Contract,
        Error::Config(_) => ErgoStatus::Config,
        Error::Io(_) => ErgoStatus::Io,
        Error::IncompleteFrame(_) | Error::Data(_) | Error::Csv(_) | Error::Json(_) => ErgoStatus::Data,
    }
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> ErgoStatus {
    let (status, msg) = match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => return ErgoStatus::Ok,
        Ok(Err(Failure::Null(what))) => (ErgoStatus::NullPointer, format!("`{what}` is null")),
        Ok(Err(Failure::Utf8(what))) => (ErgoStatus::InvalidUtf8, format!("`{what}` is not valid UTF-8")),
        Ok(Err(Failure::Contract(m))) => (ErgoStatus::Contract, m),
        Ok(Err(Failure::Lib(e))) => (lib_status(&e), e.to_string()),
        Err(_) => (ErgoStatus::Panic, "internal panic".to_string()),
    };
    set_error(msg);
    status
}

unsafe fn str_arg<'a>(p: *const c_char, what: &'static str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Failure::Utf8(what))
}

unsafe fn ref_arg<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or(Failure::Null(what))
}

unsafe fn mut_arg<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or(Failure::Null(what))
}

unsafe fn put<T>(out: *mut T, value: T, what: &'static str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure::Null(what));
    }
    out.write(value);
    Ok(())
}

unsafe fn put_box<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure::Null("out"));
    }
    out.write(Box::into_raw(Box::new(value)));
    Ok(())
}

unsafe fn put_string(out: *mut *mut c_char, s: String) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure::Null("out"));
    }
    let c = CString::new(s).map_err(|e| Failure::Contract(e.to_string()))?;
    out.write(c.into_raw());
    Ok(())
}

unsafe fn free_box<T>(p: *mut T) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Message of the last failed call on this thread, or null. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn ergo_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ergo_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `s` must be null or a string returned by this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn ergo_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Built-in skeleton model.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ergo_skeleton_default(out: *mut *mut ErgoSkeleton) -> ErgoStatus {
    guard(|| put_box(out, ErgoSkeleton(SkeletonDescriptor::default_model())))
}

/// Parses and validates a skeleton from TOML text.
///
/// # Safety
/// `toml` must be a NUL-terminated string; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ergo_skeleton_from_toml(toml: *const c_char, out: *mut *mut ErgoSkeleton) -> ErgoStatus {
    guard(|| {
        let desc = SkeletonDescriptor::from_toml_str(str_arg(toml, "toml")?)?;
        let report = validate_skeleton(&desc);
        if !report.is_ok() {
            return Err(Error::Config(report.to_string()).into());
        }
        put_box(out, ErgoSkeleton(desc))
    })
}

/// Loads and validates a skeleton file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ergo_skeleton_load(path: *const c_char, out: *mut *mut ErgoSkeleton) -> ErgoStatus {
    guard(|| put_box(out, ErgoSkeleton(SkeletonDescriptor::load_validated(str_arg(path, "path")?)?)))
}

/// Number of evaluated joints; 0 for a null handle.
///
/// # Safety
/// `skeleton` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ergo_skeleton_joint_count(skeleton: *const ErgoSkeleton) -> usize {
    skeleton.as_ref().map_or(0, |s| s.0.joints.len())
}

/// # Safety
/// `skeleton` must be null or a live handle, freed once.
#[no_mangle]
pub unsafe extern "C" fn ergo_skeleton_free(skeleton: *mut ErgoSkeleton) {
    free_box(skeleton)
}

/// Reads an `.ergframes` file.
///
/// # Safety
/// `path` must be a NUL-terminated string, `skeleton` a live handle and
/// `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ergo_recording_read(
    path: *const c_char,
    skeleton: *const ErgoSkeleton,
    ignore_unknown_ids: bool,
    out: *mut *mut ErgoRecording,
) -> ErgoStatus {
    guard(|| {
        let path = str_arg(path, "path")?;
        let desc = &ref_arg(skeleton, "skeleton")?.0;
        let rec = read_recording(path, desc, &ParseOptions { ignore_unknown_ids })?;
        put_box(out, ErgoRecording(rec))
    })
}

/// Parses `.ergframes` text held in memory.
///
/// # Safety
/// As [`ergo_recording_read`], with `text` in place of `path`.
#[no_mangle]
pub unsafe extern "C" fn ergo_recording_parse(
    text: *const c_char,
    skeleton: *const ErgoSkeleton,
    ignore_unknown_ids: bool,
    out: *mut *mut ErgoRecording,
) -> ErgoStatus {
    guard(|| {
        let text = str_arg(text, "text")?;
        let desc = &ref_arg(skeleton, "skeleton")?.0;
        let rec = parse_recording(text.as_bytes(), desc, &ParseOptions { ignore_unknown_ids })?;
        put_box(out, ErgoRecording(rec))
    })
}

/// Frame count; 0 for a null handle.
///
/// # Safety
/// `recording` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ergo_recording_frame_count(recording: *const ErgoRecording) -> usize {
    recording.as_ref().map_or(0, |r| r.0.len())
}

/// # Safety
/// `recording` must be null or a live handle, freed once.
#[no_mangle]
pub unsafe extern "C" fn ergo_recording_free(recording: *mut ErgoRecording) {
    free_box(recording)
}

/// Session aggregates of a recording as a JSON array. With `marks_window`
/// the averages span the first to last task mark, otherwise the whole
/// recording. Free the result with [`ergo_string_free`].
///
/// # Safety
/// Handles must be live; `out_json` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ergo_analyze_json(
    recording: *const ErgoRecording,
    skeleton: *const ErgoSkeleton,
    w_eta: f64,
    marks_window: bool,
    out_json: *mut *mut c_char,
) -> ErgoStatus {
    guard(|| {
        let rec = &ref_arg(recording, "recording")?.0;
        let desc = &ref_arg(skeleton, "skeleton")?.0;
        let window = if marks_window { AnalysisWindow::Marks } else { AnalysisWindow::Full };
        let aggs = session_aggregates(rec, desc, window, w_eta)?;
        let json = serde_json::to_string(&aggs).map_err(Error::from)?;
        put_string(out_json, json)
    })
}

/// Distance between two quaternions given as `[w, x, y, z]`.
///
/// # Safety
/// `a` and `b` must point to 4 doubles; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ergo_quat_distance(a: *const f64, b: *const f64, out: *mut f64) -> ErgoStatus {
    guard(|| {
        let a = ref_arg(a.cast::<[f64; 4]>(), "a")?;
        let b = ref_arg(b.cast::<[f64; 4]>(), "b")?;
        put(out, quat_distance((*a).into(), (*b).into())?, "out")
    })
}

/// Grades a normalized value against `green`/`yellow` thresholds. `sense`
/// takes an [`ErgoSense`] value.
///
/// # Safety
/// Out pointers must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ergo_score(
    value: f64,
    green: f64,
    yellow: f64,
    sense: i32,
    out_level: *mut ErgoLevel,
    out_percent: *mut f64,
) -> ErgoStatus {
    guard(|| {
        let sense = match sense {
            x if x == ErgoSense::Comfort as i32 => MetricSense::Comfort,
            x if x == ErgoSense::Divergence as i32 => MetricSense::Divergence,
            other => return Err(Failure::Contract(format!("unknown metric sense {other}"))),
        };
        let s = score(value, Thresholds { green, yellow }, sense)?;
        let level = match s.level {
            ComfortLevel::Comfortable => ErgoLevel::Comfortable,
            ComfortLevel::Caution => ErgoLevel::Caution,
            ComfortLevel::Uncomfortable => ErgoLevel::Uncomfortable,
        };
        put(out_level, level, "out_level")?;
        put(out_percent, s.percent, "out_percent")
    })
}

/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ergo_reduction_percent(baseline: f64, improved: f64, out: *mut f64) -> ErgoStatus {
    guard(|| put(out, reduction_percent(baseline, improved)?, "out"))
}

/// # Safety
/// `radii` must point to `n` doubles; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ergo_polar_polygon_area(radii: *const f64, n: usize, out: *mut f64) -> ErgoStatus {
    guard(|| {
        if radii.is_null() {
            return Err(Failure::Null("radii"));
        }
        let radii = std::slice::from_raw_parts(radii, n);
        put(out, polar_polygon_area(radii)?, "out")
    })
}

/// Mouse mapper with moving-average length `window` and raw `fullscale`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ergo_mouse_new(window: usize, fullscale: f64, out: *mut *mut ErgoMouseMapper) -> ErgoStatus {
    guard(|| {
        if window == 0 {
            return Err(Failure::Contract("mouse window must be at least 1".into()));
        }
        if !(fullscale > 0.0 && fullscale.is_finite()) {
            return Err(Failure::Contract(format!("mouse fullscale must be positive, got {fullscale}")));
        }
        put_box(out, ErgoMouseMapper(MouseMapper::new(MouseConfig { window, fullscale, ..MouseConfig::DEFAULT })))
    })
}

/// # Safety
/// `mapper` must be a live handle, `sample` readable, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ergo_mouse_process(
    mapper: *mut ErgoMouseMapper,
    sample: *const ErgoMouseSample,
    out: *mut ErgoCommand,
) -> ErgoStatus {
    guard(|| {
        let m = mut_arg(mapper, "mapper")?;
        let s = ref_arg(sample, "sample")?;
        let raw = RawMouseSample {
            t: s.t,
            dp_raw: s.dp_raw,
            de_raw: s.de_raw,
            left_button: s.left_button,
            right_button: s.right_button,
        };
        let cmd = m.0.process(&raw);
        let kind = match cmd {
            MapperCommand::Displacement(_) => ErgoCommandKind::Displacement,
            MapperCommand::Twist(_) => ErgoCommandKind::Twist,
        };
        put(out, ErgoCommand { kind, axes: cmd.axes() }, "out")
    })
}

/// # Safety
/// `mapper` must be null or a live handle, freed once.
#[no_mangle]
pub unsafe extern "C" fn ergo_mouse_free(mapper: *mut ErgoMouseMapper) {
    free_box(mapper)
}

/// CoP mapper with a square deadzone of half-width `deadzone`. A null
/// `params_toml` selects the default parameters.
///
/// # Safety
/// `params_toml` must be null or NUL-terminated; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ergo_cop_new(
    params_toml: *const c_char,
    deadzone: f64,
    out: *mut *mut ErgoCopMapper,
) -> ErgoStatus {
    guard(|| {
        if !(deadzone >= 0.0 && deadzone.is_finite()) {
            return Err(Failure::Contract(format!("deadzone must be >= 0, got {deadzone}")));
        }
        let params = if params_toml.is_null() {
            CopMapperParams::default()
        } else {
            CopMapperParams::from_toml_str(str_arg(params_toml, "params_toml")?)?
        };
        put_box(out, ErgoCopMapper { params, state: MapperState::with_deadzone([deadzone, deadzone]) })
    })
}

/// Feeds one CoP sample (`cop` and its rate, 2 doubles each). The first
/// sample fixes the anchor.
///
/// # Safety
/// `mapper` must be a live handle; array pointers readable; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ergo_cop_step(
    mapper: *mut ErgoCopMapper,
    cop: *const f64,
    cop_rate: *const f64,
    out: *mut ErgoTwist,
) -> ErgoStatus {
    guard(|| {
        let m = mut_arg(mapper, "mapper")?;
        let cop = *ref_arg(cop.cast::<[f64; 2]>(), "cop")?;
        let rate = *ref_arg(cop_rate.cast::<[f64; 2]>(), "cop_rate")?;
        let t = cop_step(&m.params, &mut m.state, cop, rate);
        put(out, ErgoTwist { vx: t.vx, vy: t.vy, wz: t.wz }, "out")
    })
}

/// # Safety
/// `mapper` must be null or a live handle, freed once.
#[no_mangle]
pub unsafe extern "C" fn ergo_cop_free(mapper: *mut ErgoCopMapper) {
    free_box(mapper)
}

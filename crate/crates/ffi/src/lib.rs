//! C interface to the relmot tracker.
//!
//! Handles are opaque and owned by the caller; every `*_new` has a matching
//! `*_free`. Functions return a [`RelmotStatus`]; on failure a message is
//! available from [`relmot_last_error`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use relmot::geometry::{iou, niou};
use relmot::{BBox, Detection, Error, TrackStatus, Tracker, TrackerConfig};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RelmotStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidConfig = 3,
    Sequencing = 4,
    BufferTooSmall = 5,
    Internal = 6,
}

/// Box in center form: `(u, v)` is the center.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RelmotBox {
    pub u: f64,
    pub v: f64,
    pub w: f64,
    pub h: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RelmotDetection {
    pub bbox: RelmotBox,
    pub score: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RelmotTrackStatus {
    Active = 0,
    Occluded = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelmotRecord {
    pub id: u64,
    pub bbox: RelmotBox,
    pub status: RelmotTrackStatus,
    pub score: f64,
}

/// Opaque tracker configuration.
pub struct RelmotConfig {
    inner: TrackerConfig,
}

/// Opaque tracker. Not safe for concurrent use; may move between threads.
pub struct RelmotTracker {
    inner: Tracker,
    records: Vec<RelmotRecord>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = CString::new(msg.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn fail(status: RelmotStatus, msg: impl Into<String>) -> RelmotStatus {
    set_error(msg);
    status
}

fn status_of(e: &Error) -> RelmotStatus {
    match e {
        Error::Config(_) => RelmotStatus::InvalidConfig,
        Error::Sequencing { .. } | Error::FrameMismatch { .. } => RelmotStatus::Sequencing,
        Error::InvalidBox { .. } | Error::DegenerateInput(_) => RelmotStatus::InvalidArgument,
        Error::AtFrame { source, .. } => status_of(source),
        _ => RelmotStatus::Internal,
    }
}

fn guard(f: impl FnOnce() -> RelmotStatus) -> RelmotStatus {
    catch_unwind(AssertUnwindSafe(f))
        .unwrap_or_else(|_| fail(RelmotStatus::Internal, "internal panic"))
}

fn to_bbox(b: &RelmotBox) -> Result<BBox, Error> {
    BBox::new(b.u, b.v, b.w, b.h)
}

fn from_bbox(b: &BBox) -> RelmotBox {
    RelmotBox {
        u: b.u,
        v: b.v,
        w: b.w,
        h: b.h,
    }
}

unsafe fn c_str<'a>(p: *const c_char) -> Option<&'a str> {
    if p.is_null() {
        return None;
    }
    CStr::from_ptr(p).to_str().ok()
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn relmot_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn relmot_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Default configuration. Free with `relmot_config_free`.
#[no_mangle]
pub extern "C" fn relmot_config_new() -> *mut RelmotConfig {
    Box::into_raw(Box::new(RelmotConfig {
        inner: TrackerConfig::default(),
    }))
}

/// # Safety
/// `config` must come from `relmot_config_new` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn relmot_config_free(config: *mut RelmotConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

/// Sets one configuration key, e.g. `"L_h"` to `"0.7"`. The config is left
/// unchanged on failure.
///
/// # Safety
/// `config` must be a live handle; `key` and `value` NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn relmot_config_set(
    config: *mut RelmotConfig,
    key: *const c_char,
    value: *const c_char,
) -> RelmotStatus {
    guard(|| {
        let Some(cfg) = config.as_mut() else {
            return fail(RelmotStatus::NullPointer, "config is null");
        };
        let (Some(key), Some(value)) = (c_str(key), c_str(value)) else {
            return fail(RelmotStatus::InvalidArgument, "key and value must be UTF-8 strings");
        };
        let mut next = cfg.inner.clone();
        match next.set(key, value).and_then(|()| next.validate()) {
            Ok(()) => {
                cfg.inner = next;
                RelmotStatus::Ok
            }
            Err(e) => fail(status_of(&e), e.to_string()),
        }
    })
}

/// Creates a tracker. `config` may be null for the defaults.
///
/// # Safety
/// `config` must be null or a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn relmot_tracker_new(
    config: *const RelmotConfig,
    out: *mut *mut RelmotTracker,
) -> RelmotStatus {
    guard(|| {
        if out.is_null() {
            return fail(RelmotStatus::NullPointer, "out is null");
        }
        let cfg = config.as_ref().map_or_else(TrackerConfig::default, |c| c.inner.clone());
        match Tracker::new(cfg) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(RelmotTracker {
                    inner,
                    records: Vec::new(),
                }));
                RelmotStatus::Ok
            }
            Err(e) => fail(status_of(&e), e.to_string()),
        }
    })
}

/// # Safety
/// `tracker` must come from `relmot_tracker_new` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn relmot_tracker_free(tracker: *mut RelmotTracker) {
    if !tracker.is_null() {
        drop(Box::from_raw(tracker));
    }
}

/// Advances the tracker by one frame. Frames must strictly increase.
/// The number of reported tracks is written to `out_count`; fetch them with
/// `relmot_tracker_records`.
///
/// # Safety
/// `tracker` must be a live handle; `detections` must point to `count`
/// elements (or be null when `count` is 0); `out_count` must be writable.
#[no_mangle]
pub unsafe extern "C" fn relmot_tracker_step(
    tracker: *mut RelmotTracker,
    frame: u32,
    detections: *const RelmotDetection,
    count: usize,
    out_count: *mut usize,
) -> RelmotStatus {
    guard(|| {
        let Some(t) = tracker.as_mut() else {
            return fail(RelmotStatus::NullPointer, "tracker is null");
        };
        if out_count.is_null() || (detections.is_null() && count > 0) {
            return fail(RelmotStatus::NullPointer, "detections or out_count is null");
        }
        let raw = if count == 0 {
            &[][..]
        } else {
            std::slice::from_raw_parts(detections, count)
        };
        let mut dets = Vec::with_capacity(raw.len());
        for (i, d) in raw.iter().enumerate() {
            match to_bbox(&d.bbox).and_then(|b| Detection::new(b, d.score, frame)) {
                Ok(det) => dets.push(det),
                Err(e) => return fail(RelmotStatus::InvalidArgument, format!("detection {i}: {e}")),
            }
        }
        match t.inner.step(frame, &dets) {
            Ok(result) => {
                t.records = result
                    .records
                    .iter()
                    .map(|r| RelmotRecord {
                        id: r.id.0,
                        bbox: from_bbox(&r.bbox),
                        status: match r.status {
                            TrackStatus::Occluded => RelmotTrackStatus::Occluded,
                            _ => RelmotTrackStatus::Active,
                        },
                        score: r.score,
                    })
                    .collect();
                *out_count = t.records.len();
                RelmotStatus::Ok
            }
            Err(e) => fail(status_of(&e), e.to_string()),
        }
    })
}

/// Copies the records of the last step into `out`, sorted by id. Writes the
/// number of records to `out_len`; fails with `BufferTooSmall` (copying
/// nothing) when `capacity` is insufficient.
///
/// # Safety
/// `tracker` must be a live handle; `out` must have room for `capacity`
/// records; `out_len` must be writable.
#[no_mangle]
pub unsafe extern "C" fn relmot_tracker_records(
    tracker: *const RelmotTracker,
    out: *mut RelmotRecord,
    capacity: usize,
    out_len: *mut usize,
) -> RelmotStatus {
    guard(|| {
        let Some(t) = tracker.as_ref() else {
            return fail(RelmotStatus::NullPointer, "tracker is null");
        };
        if out_len.is_null() {
            return fail(RelmotStatus::NullPointer, "out_len is null");
        }
        *out_len = t.records.len();
        if t.records.is_empty() {
            return RelmotStatus::Ok;
        }
        if out.is_null() {
            return fail(RelmotStatus::NullPointer, "out is null");
        }
        if capacity < t.records.len() {
            return fail(
                RelmotStatus::BufferTooSmall,
                format!("need room for {} records, got {capacity}", t.records.len()),
            );
        }
        ptr::copy_nonoverlapping(t.records.as_ptr(), out, t.records.len());
        RelmotStatus::Ok
    })
}

/// Intersection over union. Writes the value to `out`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn relmot_iou(a: RelmotBox, b: RelmotBox, out: *mut f64) -> RelmotStatus {
    pair_metric(a, b, out, iou)
}

/// Normalized IoU of a detection against a prediction. Not symmetric.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn relmot_niou(det: RelmotBox, pred: RelmotBox, out: *mut f64) -> RelmotStatus {
    pair_metric(det, pred, out, niou)
}

unsafe fn pair_metric(
    a: RelmotBox,
    b: RelmotBox,
    out: *mut f64,
    f: fn(&BBox, &BBox) -> f64,
) -> RelmotStatus {
    guard(|| {
        if out.is_null() {
            return fail(RelmotStatus::NullPointer, "out is null");
        }
        match (to_bbox(&a), to_bbox(&b)) {
            (Ok(a), Ok(b)) => {
                *out = f(&a, &b);
                RelmotStatus::Ok
            }
            (Err(e), _) | (_, Err(e)) => fail(RelmotStatus::InvalidArgument, e.to_string()),
        }
    })
}

use std::ffi::{CStr, CString};
use std::ptr;

use relmot_ffi::*;

fn bx(u: f64, v: f64, w: f64, h: f64) -> RelmotBox {
    RelmotBox { u, v, w, h }
}

fn last_error() -> String {
    let p = relmot_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn new_tracker(config: *const RelmotConfig) -> *mut RelmotTracker {
    let mut t = ptr::null_mut();
    assert_eq!(unsafe { relmot_tracker_new(config, &mut t) }, RelmotStatus::Ok);
    assert!(!t.is_null());
    t
}

fn step(t: *mut RelmotTracker, frame: u32, dets: &[RelmotDetection]) -> Vec<RelmotRecord> {
    let mut n = 0;
    let status = unsafe { relmot_tracker_step(t, frame, dets.as_ptr(), dets.len(), &mut n) };
    assert_eq!(status, RelmotStatus::Ok, "{}", last_error());
    let mut out = vec![
        RelmotRecord {
            id: 0,
            bbox: RelmotBox::default(),
            status: RelmotTrackStatus::Active,
            score: 0.0,
        };
        n
    ];
    let mut len = 0;
    assert_eq!(
        unsafe { relmot_tracker_records(t, out.as_mut_ptr(), out.len(), &mut len) },
        RelmotStatus::Ok
    );
    assert_eq!(len, n);
    out
}

#[test]
fn tracks_keep_their_ids() {
    let t = new_tracker(ptr::null());
    let dets = [
        RelmotDetection { bbox: bx(100.0, 200.0, 40.0, 100.0), score: 0.95 },
        RelmotDetection { bbox: bx(400.0, 200.0, 40.0, 100.0), score: 0.9 },
    ];
    let first = step(t, 1, &dets);
    assert_eq!(first.iter().map(|r| r.id).collect::<Vec<_>>(), vec![1, 2]);
    let second = step(t, 2, &dets);
    assert_eq!(second.iter().map(|r| r.id).collect::<Vec<_>>(), vec![1, 2]);
    assert_eq!(second[0].bbox, dets[0].bbox);
    assert_eq!(second[0].status, RelmotTrackStatus::Active);
    assert_eq!(step(t, 3, &[]).len(), 0);
    unsafe { relmot_tracker_free(t) };
}

#[test]
fn out_of_order_frames_are_rejected() {
    let t = new_tracker(ptr::null());
    step(t, 5, &[]);
    let mut n = 0;
    let status = unsafe { relmot_tracker_step(t, 5, ptr::null(), 0, &mut n) };
    assert_eq!(status, RelmotStatus::Sequencing);
    assert!(last_error().contains("frame"));
    unsafe { relmot_tracker_free(t) };
}

#[test]
fn invalid_detections_are_rejected() {
    let t = new_tracker(ptr::null());
    let mut n = 0;
    let bad = [RelmotDetection { bbox: bx(0.0, 0.0, -1.0, 10.0), score: 0.9 }];
    let status = unsafe { relmot_tracker_step(t, 1, bad.as_ptr(), 1, &mut n) };
    assert_eq!(status, RelmotStatus::InvalidArgument);
    let bad = [RelmotDetection { bbox: bx(0.0, 0.0, 10.0, 10.0), score: 1.5 }];
    let status = unsafe { relmot_tracker_step(t, 1, bad.as_ptr(), 1, &mut n) };
    assert_eq!(status, RelmotStatus::InvalidArgument);
    unsafe { relmot_tracker_free(t) };
}

#[test]
fn small_buffer_reports_the_needed_length() {
    let t = new_tracker(ptr::null());
    let dets = [
        RelmotDetection { bbox: bx(100.0, 200.0, 40.0, 100.0), score: 0.95 },
        RelmotDetection { bbox: bx(400.0, 200.0, 40.0, 100.0), score: 0.9 },
    ];
    let mut n = 0;
    unsafe { relmot_tracker_step(t, 1, dets.as_ptr(), 2, &mut n) };
    let mut one = [RelmotRecord {
        id: 0,
        bbox: RelmotBox::default(),
        status: RelmotTrackStatus::Active,
        score: 0.0,
    }];
    let mut len = 0;
    let status = unsafe { relmot_tracker_records(t, one.as_mut_ptr(), 1, &mut len) };
    assert_eq!(status, RelmotStatus::BufferTooSmall);
    assert_eq!(len, 2);
    assert_eq!(one[0].id, 0);
    unsafe { relmot_tracker_free(t) };
}

#[test]
fn config_set_validates() {
    let cfg = relmot_config_new();
    let key = CString::new("L_n").unwrap();
    let high = CString::new("0.99").unwrap();
    assert_eq!(unsafe { relmot_config_set(cfg, key.as_ptr(), high.as_ptr()) }, RelmotStatus::Ok);

    let l_l = CString::new("L_l").unwrap();
    let too_big = CString::new("0.9").unwrap();
    assert_eq!(
        unsafe { relmot_config_set(cfg, l_l.as_ptr(), too_big.as_ptr()) },
        RelmotStatus::InvalidConfig
    );
    let unknown = CString::new("no_such_key").unwrap();
    assert_eq!(
        unsafe { relmot_config_set(cfg, unknown.as_ptr(), high.as_ptr()) },
        RelmotStatus::InvalidConfig
    );
    assert_eq!(
        unsafe { relmot_config_set(ptr::null_mut(), key.as_ptr(), high.as_ptr()) },
        RelmotStatus::NullPointer
    );

    // A 0.95 detection no longer starts a track with L_n = 0.99.
    let t = new_tracker(cfg);
    let dets = [RelmotDetection { bbox: bx(100.0, 200.0, 40.0, 100.0), score: 0.95 }];
    assert!(step(t, 1, &dets).is_empty());
    unsafe {
        relmot_tracker_free(t);
        relmot_config_free(cfg);
    }
}

#[test]
fn geometry_helpers() {
    let a = bx(5.0, 5.0, 10.0, 10.0);
    let b = bx(10.0, 5.0, 10.0, 10.0);
    let mut out = 0.0;
    assert_eq!(unsafe { relmot_iou(a, b, &mut out) }, RelmotStatus::Ok);
    assert!((out - 1.0 / 3.0).abs() < 1e-12);
    assert_eq!(unsafe { relmot_niou(a, b, &mut out) }, RelmotStatus::Ok);
    assert!((out - (1.0 / 3.0 - 0.125)).abs() < 1e-12);
    assert_eq!(unsafe { relmot_iou(a, bx(0.0, 0.0, 0.0, 1.0), &mut out) }, RelmotStatus::InvalidArgument);
    assert_eq!(unsafe { relmot_iou(a, b, ptr::null_mut()) }, RelmotStatus::NullPointer);
}

#[test]
fn null_handles_are_harmless() {
    unsafe {
        relmot_tracker_free(ptr::null_mut());
        relmot_config_free(ptr::null_mut());
        let mut t = ptr::null_mut();
        assert_eq!(relmot_tracker_new(ptr::null(), ptr::null_mut()), RelmotStatus::NullPointer);
        assert_eq!(relmot_tracker_new(ptr::null(), &mut t), RelmotStatus::Ok);
        let mut n = 0;
        assert_eq!(relmot_tracker_step(t, 1, ptr::null(), 3, &mut n), RelmotStatus::NullPointer);
        relmot_tracker_free(t);
    }
    let v = unsafe { CStr::from_ptr(relmot_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_declares_the_api() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/relmot.h")).unwrap();
    for name in [
        "typedef struct RelmotTracker RelmotTracker;",
        "relmot_tracker_new",
        "relmot_tracker_step",
        "relmot_tracker_records",
        "relmot_tracker_free",
        "relmot_config_set",
        "relmot_niou",
        "RELMOT_STATUS_BUFFER_TOO_SMALL = 5",
    ] {
        assert!(header.contains(name), "{name}");
    }
}

//! Online multi-object tracking from detection boxes alone.
//!
//! Tracks are predicted with a constant-velocity Kalman filter and matched
//! to detections by normalized IoU in two score-ordered stages. A global
//! camera shift is estimated from the first matching pass and removed before
//! matching again. Unmatched tracks that sit under other tracks are reported
//! as occluded and kept alive until they reappear.
//!
//! ```
//! use relmot::{BBox, Detection, Tracker, TrackerConfig};
//!
//! let mut tracker = Tracker::new(TrackerConfig::default()).unwrap();
//! let det = Detection::new(BBox::new(100.0, 200.0, 40.0, 100.0).unwrap(), 0.95, 1).unwrap();
//! let out = tracker.step(1, &[det]).unwrap();
//! assert_eq!(out.records.len(), 1);
//! ```

pub mod assignment;
pub mod association;
pub mod camera_motion;
pub mod cli;
pub mod config;
pub mod error;
pub mod geometry;
pub mod lifecycle;
pub mod metrics;
pub mod mot_io;
pub mod motion;
pub mod synth;
pub mod tracker;

pub use association::{Detection, MatchResult, TrackId};
pub use config::TrackerConfig;
pub use error::{Error, Result};
pub use geometry::BBox;
pub use lifecycle::{Track, TrackStatus};
pub use tracker::{run_sequence, FrameDetections, FrameRecord, FrameResult, Tracker};

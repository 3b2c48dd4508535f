//! Post-association bookkeeping: occlusion detection, pruning of lost
//! tracks, and track birth.

use crate::association::{Detection, TrackId};
use crate::config::TrackerConfig;
use crate::error::{Error, Result};
use crate::geometry::{covered_ratio, BBox};
use crate::motion::{initiate, state_to_box, KalmanState};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrackStatus {
    Active,
    Occluded,
    Lost,
}

impl TrackStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            TrackStatus::Active => "active",
            TrackStatus::Occluded => "occluded",
            TrackStatus::Lost => "lost",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Track {
    pub id: TrackId,
    pub kstate: KalmanState,
    /// Frames since birth, counting the birth frame.
    pub age: u32,
    /// Consecutive frames without a matched detection.
    pub time_since_observed: u32,
    /// Consecutive unmatched frames spent uncovered.
    pub uncovered_streak: u32,
    pub status: TrackStatus,
    pub last_score: f64,
}

/// Hands out strictly increasing ids starting at 1.
#[derive(Debug, Clone)]
pub struct IdAllocator {
    next: u64,
}

impl Default for IdAllocator {
    fn default() -> Self {
        IdAllocator { next: 1 }
    }
}

impl IdAllocator {
    pub fn next_id(&mut self) -> TrackId {
        let id = TrackId(self.next);
        self.next += 1;
        id
    }
}

/// `(age / time_since_observed) * (box area / avg_area)`.
pub fn tracklet_confidence(track: &Track, avg_area: f64) -> Result<f64> {
    if track.time_since_observed == 0 {
        return Err(Error::DegenerateInput(
            "tracklet confidence needs time_since_observed >= 1",
        ));
    }
    if avg_area.is_nan() || avg_area <= 0.0 {
        return Err(Error::DegenerateInput("average area must be positive"));
    }
    let area = state_to_box(&track.kstate)?.area();
    Ok(track.age as f64 / track.time_since_observed as f64 * (area / avg_area))
}

fn covered_ratio_of(id: TrackId, all_predicted: &[(TrackId, BBox)]) -> f64 {
    match all_predicted.iter().find(|(pid, _)| *pid == id) {
        Some((_, own)) => covered_ratio(
            own,
            all_predicted
                .iter()
                .filter(|(pid, _)| *pid != id)
                .map(|(_, b)| b),
        ),
        None => 0.0,
    }
}

fn average_area(all_predicted: &[(TrackId, BBox)]) -> f64 {
    if all_predicted.is_empty() {
        return 0.0;
    }
    all_predicted.iter().map(|(_, b)| b.area()).sum::<f64>() / all_predicted.len() as f64
}

/// Splits unmatched tracks into occluded ones and the rest.
///
/// A track is occluded when another predicted box covers more than `L_cr` of
/// it and its confidence exceeds `L_c`. Occluded tracks get status
/// `Occluded` and their uncovered streak cleared.
pub fn detect_occlusions(
    unmatched: Vec<Track>,
    all_predicted: &[(TrackId, BBox)],
    config: &TrackerConfig,
) -> (Vec<Track>, Vec<Track>) {
    let avg_area = average_area(all_predicted);
    let mut occluded = Vec::new();
    let mut remaining = Vec::new();
    for mut track in unmatched {
        let covered = covered_ratio_of(track.id, all_predicted) > config.covered_ratio;
        let confident = covered
            && tracklet_confidence(&track, avg_area).is_ok_and(|c| c > config.confidence);
        if covered && confident {
            track.status = TrackStatus::Occluded;
            track.uncovered_streak = 0;
            occluded.push(track);
        } else {
            remaining.push(track);
        }
    }
    (occluded, remaining)
}

/// Advances each track's uncovered streak and removes those reaching
/// `prune_patience`. Survivors become `Lost`.
///
/// With occlusion handling disabled, every unmatched frame counts as
/// uncovered, which reduces this to a fixed-patience deletion rule.
pub fn prune_tracklets(
    remaining: Vec<Track>,
    all_predicted: &[(TrackId, BBox)],
    config: &TrackerConfig,
) -> (Vec<Track>, Vec<TrackId>) {
    let mut kept = Vec::new();
    let mut removed = Vec::new();
    for mut track in remaining {
        let uncovered = !config.occlusion_handling
            || covered_ratio_of(track.id, all_predicted) <= config.covered_ratio;
        if uncovered {
            track.uncovered_streak += 1;
        } else {
            track.uncovered_streak = 0;
        }
        if track.uncovered_streak >= config.prune_patience {
            removed.push(track.id);
        } else {
            track.status = TrackStatus::Lost;
            kept.push(track);
        }
    }
    (kept, removed)
}

/// Starts a track for every detection scoring above `L_n`.
pub fn create_tracklets(
    unmatched_dets: &[Detection],
    config: &TrackerConfig,
    ids: &mut IdAllocator,
) -> Vec<Track> {
    unmatched_dets
        .iter()
        .filter(|d| d.score > config.new_track_score)
        .map(|d| Track {
            id: ids.next_id(),
            kstate: initiate(&d.bbox, &config.kalman),
            age: 1,
            time_since_observed: 0,
            uncovered_streak: 0,
            status: TrackStatus::Active,
            last_score: d.score,
        })
        .collect()
}

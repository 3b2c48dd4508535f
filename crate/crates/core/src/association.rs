//! Two-stage score-cascade matching on normalized IoU.

use std::fmt;

use crate::assignment::{solve_assignment, Matrix};
use crate::config::TrackerConfig;
use crate::error::{Error, Result};
use crate::geometry::{niou, BBox};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TrackId(pub u64);

impl fmt::Display for TrackId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detection {
    pub bbox: BBox,
    pub score: f64,
    pub frame: u32,
}

impl Detection {
    pub fn new(bbox: BBox, score: f64, frame: u32) -> Result<Self> {
        if !(0.0..=1.0).contains(&score) {
            return Err(Error::Config(format!("detection score {score} outside [0, 1]")));
        }
        Ok(Detection { bbox, score, frame })
    }
}

/// Result of one association pass. Detection entries are indices into the
/// slice that was matched; discarded low-score detections appear nowhere.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MatchResult {
    pub matches: Vec<(TrackId, usize)>,
    pub unmatched_tracks: Vec<TrackId>,
    pub unmatched_detections: Vec<usize>,
}

/// Detection indices bucketed by score, input order preserved.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ScoreSplit {
    pub high: Vec<usize>,
    pub low: Vec<usize>,
    pub discarded: Vec<usize>,
}

/// `high` takes `score > high_threshold`, `low` takes
/// `low_threshold < score <= high_threshold`, the rest is discarded.
pub fn split_by_score(
    dets: &[Detection],
    high_threshold: f64,
    low_threshold: f64,
) -> Result<ScoreSplit> {
    if low_threshold >= high_threshold {
        return Err(Error::Config(format!(
            "low score threshold {low_threshold} must be below high threshold {high_threshold}"
        )));
    }
    Ok(split_unchecked(dets, high_threshold, low_threshold))
}

fn split_unchecked(dets: &[Detection], high: f64, low: f64) -> ScoreSplit {
    let mut split = ScoreSplit::default();
    for (i, d) in dets.iter().enumerate() {
        if d.score > high {
            split.high.push(i);
        } else if d.score > low {
            split.low.push(i);
        } else {
            split.discarded.push(i);
        }
    }
    split
}

/// Cascade matching with normalized IoU as the similarity.
pub fn cascade_match(
    dets: &[Detection],
    predicted: &[(TrackId, BBox)],
    config: &TrackerConfig,
) -> MatchResult {
    cascade_match_by(dets, predicted, config, |d, p| niou(&d.bbox, p))
}

/// Cascade matching with a caller-supplied similarity `(detection, predicted box)`.
///
/// Stage one assigns high-score detections against every track under
/// `stage1_min_niou`; stage two assigns low-score detections against the
/// tracks stage one left over, under `stage2_min_niou`.
pub fn cascade_match_by<F>(
    dets: &[Detection],
    predicted: &[(TrackId, BBox)],
    config: &TrackerConfig,
    similarity: F,
) -> MatchResult
where
    F: Fn(&Detection, &BBox) -> f64,
{
    let split = split_unchecked(dets, config.high_score, config.low_score);
    let all_tracks: Vec<usize> = (0..predicted.len()).collect();

    let stage = |tracks: &[usize], det_idx: &[usize], gate: f64| {
        let sim = Matrix::from_fn(tracks.len(), det_idx.len(), |r, c| {
            similarity(&dets[det_idx[c]], &predicted[tracks[r]].1)
        });
        let a = solve_assignment(&sim, gate);
        let pairs: Vec<(usize, usize)> = a
            .pairs
            .iter()
            .map(|&(r, c)| (tracks[r], det_idx[c]))
            .collect();
        let left_tracks: Vec<usize> = a.unmatched_rows.iter().map(|&r| tracks[r]).collect();
        let left_dets: Vec<usize> = a.unmatched_cols.iter().map(|&c| det_idx[c]).collect();
        (pairs, left_tracks, left_dets)
    };

    let (mut pairs, left_tracks, mut left_dets) =
        stage(&all_tracks, &split.high, config.stage1_min_niou);

    let left_tracks = if config.low_score_matching {
        let (pairs_low, left_low_tracks, left_low_dets) =
            stage(&left_tracks, &split.low, config.stage2_min_niou);
        pairs.extend(pairs_low);
        left_dets.extend(left_low_dets);
        left_low_tracks
    } else {
        left_dets.extend(split.low.iter().copied());
        left_tracks
    };
    left_dets.sort_unstable();

    MatchResult {
        matches: pairs.into_iter().map(|(t, d)| (predicted[t].0, d)).collect(),
        unmatched_tracks: left_tracks.into_iter().map(|t| predicted[t].0).collect(),
        unmatched_detections: left_dets,
    }
}

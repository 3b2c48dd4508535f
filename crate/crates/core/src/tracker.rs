//! Per-frame pipeline: predict, cascade match with camera-motion
//! compensation, correct, detect occlusions, prune, create, report.

use crate::association::{cascade_match, Detection, MatchResult, TrackId};
use crate::camera_motion::{apply_shift, rematch_with_compensation, CameraMotionEstimate};
use crate::config::TrackerConfig;
use crate::error::{Error, Result};
use crate::geometry::BBox;
use crate::lifecycle::{
    create_tracklets, detect_occlusions, prune_tracklets, IdAllocator, Track, TrackStatus,
};
use crate::motion::{correct, predict, state_to_box};

/// Detections of one frame.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FrameDetections {
    pub frame: u32,
    pub detections: Vec<Detection>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameRecord {
    pub id: TrackId,
    pub bbox: BBox,
    pub status: TrackStatus,
    pub score: f64,
}

/// Reported tracks of one frame, sorted by id.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FrameResult {
    pub frame: u32,
    pub records: Vec<FrameRecord>,
}

/// Online tracker state. Steps must be fed in strictly increasing frame order.
#[derive(Debug, Clone)]
pub struct Tracker {
    config: TrackerConfig,
    tracks: Vec<Track>,
    ids: IdAllocator,
    last_frame: Option<u32>,
    carried: Vec<Detection>,
    last_shift: CameraMotionEstimate,
}

impl Tracker {
    pub fn new(config: TrackerConfig) -> Result<Self> {
        config.validate()?;
        Ok(Tracker {
            config,
            tracks: Vec::new(),
            ids: IdAllocator::default(),
            last_frame: None,
            carried: Vec::new(),
            last_shift: CameraMotionEstimate::default(),
        })
    }

    pub fn config(&self) -> &TrackerConfig {
        &self.config
    }

    /// Live tracks (active, occluded and lost), sorted by id.
    pub fn tracks(&self) -> &[Track] {
        &self.tracks
    }

    /// Camera shift estimated in the most recent step.
    pub fn last_shift(&self) -> CameraMotionEstimate {
        self.last_shift
    }

    pub fn step(&mut self, frame: u32, detections: &[Detection]) -> Result<FrameResult> {
        if let Some(last) = self.last_frame {
            if frame <= last {
                return Err(Error::Sequencing { last, got: frame });
            }
        }
        if let Some(d) = detections.iter().find(|d| d.frame != frame) {
            return Err(Error::FrameMismatch {
                frame,
                det_frame: d.frame,
            });
        }
        self.last_frame = Some(frame);
        let cfg = &self.config;

        let input_len = detections.len();
        let mut dets = detections.to_vec();
        dets.extend(
            std::mem::take(&mut self.carried)
                .into_iter()
                .map(|d| Detection { frame, ..d }),
        );

        // Predict; tracks whose state degenerates are dropped.
        let mut tracks = Vec::with_capacity(self.tracks.len());
        let mut predicted = Vec::with_capacity(self.tracks.len());
        for mut t in std::mem::take(&mut self.tracks) {
            t.kstate = predict(&t.kstate, &cfg.kalman);
            t.age += 1;
            if let Ok(b) = state_to_box(&t.kstate) {
                predicted.push((t.id, b));
                tracks.push(t);
            }
        }

        let (matched, shift): (MatchResult, _) = if cfg.camera_motion_removal {
            rematch_with_compensation(&dets, &predicted, cfg)
        } else {
            (
                cascade_match(&dets, &predicted, cfg),
                CameraMotionEstimate::default(),
            )
        };
        self.last_shift = shift;
        let compensated = apply_shift(&predicted, &shift);

        let mut assigned: Vec<Option<usize>> = vec![None; tracks.len()];
        for &(id, di) in &matched.matches {
            if let Ok(pos) = tracks.binary_search_by_key(&id, |t| t.id) {
                assigned[pos] = Some(di);
            }
        }

        let mut records = Vec::with_capacity(tracks.len() + dets.len());
        let mut live = Vec::with_capacity(tracks.len() + dets.len());
        let mut unmatched = Vec::new();
        for (mut t, slot) in tracks.into_iter().zip(assigned) {
            match slot {
                Some(di) => {
                    let d = &dets[di];
                    t.kstate = correct(&t.kstate, &d.bbox, &cfg.kalman);
                    let Ok(b) = state_to_box(&t.kstate) else {
                        continue;
                    };
                    t.time_since_observed = 0;
                    t.uncovered_streak = 0;
                    t.status = TrackStatus::Active;
                    t.last_score = d.score;
                    records.push(FrameRecord {
                        id: t.id,
                        bbox: b,
                        status: TrackStatus::Active,
                        score: d.score,
                    });
                    live.push(t);
                }
                None => {
                    t.time_since_observed += 1;
                    unmatched.push(t);
                }
            }
        }

        let (occluded, remaining) = if cfg.occlusion_handling {
            detect_occlusions(unmatched, &compensated, cfg)
        } else {
            (Vec::new(), unmatched)
        };
        for t in &occluded {
            if let Some((_, b)) = compensated.iter().find(|(id, _)| *id == t.id) {
                records.push(FrameRecord {
                    id: t.id,
                    bbox: *b,
                    status: TrackStatus::Occluded,
                    score: t.last_score,
                });
            }
        }
        live.extend(occluded);

        let (lost, _removed) = prune_tracklets(remaining, &compensated, cfg);
        live.extend(lost);

        let leftover: Vec<Detection> = matched
            .unmatched_detections
            .iter()
            .map(|&i| dets[i])
            .collect();
        let born = create_tracklets(&leftover, cfg, &mut self.ids);
        for t in &born {
            if let Ok(b) = state_to_box(&t.kstate) {
                records.push(FrameRecord {
                    id: t.id,
                    bbox: b,
                    status: TrackStatus::Active,
                    score: t.last_score,
                });
            }
        }
        live.extend(born);

        if cfg.carry_unmatched_detections {
            self.carried = matched
                .unmatched_detections
                .iter()
                .filter(|&&i| i < input_len && dets[i].score <= cfg.new_track_score)
                .map(|&i| dets[i])
                .collect();
        }

        live.sort_by_key(|t| t.id);
        records.sort_by_key(|r| r.id);
        self.tracks = live;
        Ok(FrameResult { frame, records })
    }
}

/// Runs a fresh tracker over a stream of frames sorted ascending.
///
/// Frame numbers missing between the first and last group are processed as
/// empty frames, so the output holds one result per frame in that range.
pub fn run_sequence(config: &TrackerConfig, stream: &[FrameDetections]) -> Result<Vec<FrameResult>> {
    let mut tracker = Tracker::new(config.clone())?;
    let mut out = Vec::new();
    let Some(first) = stream.first() else {
        return Ok(out);
    };
    let mut next = first.frame;
    for group in stream {
        if group.frame < next {
            let last = next.saturating_sub(1);
            return Err(Error::AtFrame {
                frame: group.frame,
                source: Box::new(Error::Sequencing {
                    last,
                    got: group.frame,
                }),
            });
        }
        while next < group.frame {
            out.push(tracker.step(next, &[]).map_err(|e| at_frame(next, e))?);
            next += 1;
        }
        out.push(
            tracker
                .step(group.frame, &group.detections)
                .map_err(|e| at_frame(group.frame, e))?,
        );
        next = group.frame + 1;
    }
    Ok(out)
}

fn at_frame(frame: u32, source: Error) -> Error {
    Error::AtFrame {
        frame,
        source: Box::new(source),
    }
}

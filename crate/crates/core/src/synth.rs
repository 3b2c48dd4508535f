//! Synthetic ground truth and detections with controllable camera pans,
//! occluding crossings, box noise, misses and false positives.

use std::fmt::Write as _;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};

use crate::association::Detection;
use crate::error::{Error, Result};
use crate::geometry::{intersection_area, BBox};
use crate::mot_io::{LabeledBox, LabeledFrame};
use crate::tracker::FrameDetections;

/// Cover fraction above which a target counts as occluded.
pub const OCCLUDED_COVER: f64 = 0.7;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TargetSpec {
    pub birth: u32,
    /// Last frame the target exists (inclusive).
    pub death: u32,
    pub initial: BBox,
    /// Per-frame center velocity.
    pub velocity: (f64, f64),
}

/// Camera pan: every box moves by `(du, dv)` from `frame` on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PanEvent {
    pub frame: u32,
    pub du: f64,
    pub dv: f64,
}

/// Truncated-normal score model. True positives are additionally scaled by
/// visibility.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreModel {
    pub tp_mean: f64,
    pub tp_std: f64,
    pub fp_mean: f64,
    pub fp_std: f64,
}

impl Default for ScoreModel {
    fn default() -> Self {
        ScoreModel {
            tp_mean: 0.85,
            tp_std: 0.1,
            fp_mean: 0.07,
            fp_std: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    pub name: String,
    pub frames: u32,
    pub targets: Vec<TargetSpec>,
    pub pans: Vec<PanEvent>,
    /// Box jitter standard deviation as a fraction of the box height.
    pub noise: f64,
    /// Expected false positives per frame.
    pub fp_rate: f64,
    pub miss_rate: f64,
    /// Miss probability for targets covered above `OCCLUDED_COVER`.
    pub occluded_miss_rate: f64,
    pub scores: ScoreModel,
    pub field: (f64, f64),
    pub seed: u64,
}

impl Default for ScenarioSpec {
    fn default() -> Self {
        ScenarioSpec {
            name: "scenario".into(),
            frames: 100,
            targets: Vec::new(),
            pans: Vec::new(),
            noise: 0.0,
            fp_rate: 0.0,
            miss_rate: 0.0,
            occluded_miss_rate: 0.0,
            scores: ScoreModel::default(),
            field: (1920.0, 1080.0),
            seed: 0,
        }
    }
}

/// What the generator injected in one frame.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FrameDiagnostics {
    pub frame: u32,
    /// Pan applied at this frame.
    pub pan: (f64, f64),
    /// Cumulative camera offset.
    pub offset: (f64, f64),
    pub detections: usize,
    pub missed: usize,
    pub false_positives: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub spec: ScenarioSpec,
    pub gt: Vec<LabeledFrame>,
    pub dets: Vec<FrameDetections>,
    pub diagnostics: Vec<FrameDiagnostics>,
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Scenario(msg));
        if self.frames == 0 {
            return bad("frames must be at least 1".into());
        }
        for (i, t) in self.targets.iter().enumerate() {
            if t.birth < 1 || t.birth >= t.death || t.death > self.frames {
                return bad(format!(
                    "target {i}: need 1 <= birth < death <= frames, got birth {} death {}",
                    t.birth, t.death
                ));
            }
            if !(t.velocity.0.is_finite() && t.velocity.1.is_finite()) {
                return bad(format!("target {i}: non-finite velocity"));
            }
        }
        for p in &self.pans {
            if p.frame < 1 || p.frame > self.frames {
                return bad(format!("pan at frame {} outside 1..={}", p.frame, self.frames));
            }
        }
        for (name, v) in [
            ("miss_rate", self.miss_rate),
            ("occluded_miss_rate", self.occluded_miss_rate),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return bad(format!("{name} = {v} must lie in [0, 1]"));
            }
        }
        if !(self.fp_rate >= 0.0 && self.fp_rate.is_finite()) {
            return bad(format!("fp_rate = {} must be non-negative", self.fp_rate));
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return bad(format!("noise = {} must be non-negative", self.noise));
        }
        let s = &self.scores;
        if s.tp_std < 0.0 || s.fp_std < 0.0 {
            return bad("score deviations must be non-negative".into());
        }
        if !(self.field.0 > 0.0 && self.field.1 > 0.0) {
            return bad("field size must be positive".into());
        }
        Ok(())
    }

    /// Parses the `key = value` scenario format. `target` and `pan` lines
    /// repeat, one entry each:
    ///
    /// ```text
    /// target = birth,death,u,v,w,h,vu,vv
    /// pan = frame,du,dv
    /// ```
    pub fn parse(text: &str) -> Result<Self> {
        let mut spec = ScenarioSpec::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            spec.apply_line(line)
                .map_err(|msg| Error::Scenario(format!("line {}: {msg}", n + 1)))?;
        }
        spec.validate()?;
        Ok(spec)
    }

    fn apply_line(&mut self, line: &str) -> std::result::Result<(), String> {
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("expected key = value, got {line:?}"))?;
        let (key, value) = (key.trim(), value.trim());
        let num = |v: &str| -> std::result::Result<f64, String> {
            v.trim()
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| format!("{key}: not a number: {v:?}"))
        };
        let int = |v: &str| -> std::result::Result<u64, String> {
            v.trim().parse::<u64>().map_err(|_| format!("{key}: not a non-negative integer: {v:?}"))
        };
        let list = |v: &str, n: usize| -> std::result::Result<Vec<f64>, String> {
            let parts: Vec<&str> = v.split(',').collect();
            if parts.len() != n {
                return Err(format!("{key}: expected {n} comma-separated values"));
            }
            parts.into_iter().map(num).collect()
        };
        match key {
            "name" => self.name = value.to_string(),
            "frames" => {
                self.frames = u32::try_from(int(value)?).map_err(|_| "frames too large".to_string())?
            }
            "seed" => self.seed = int(value)?,
            "noise" => self.noise = num(value)?,
            "fp_rate" => self.fp_rate = num(value)?,
            "miss_rate" => self.miss_rate = num(value)?,
            "occluded_miss_rate" => self.occluded_miss_rate = num(value)?,
            "tp_score_mean" => self.scores.tp_mean = num(value)?,
            "tp_score_std" => self.scores.tp_std = num(value)?,
            "fp_score_mean" => self.scores.fp_mean = num(value)?,
            "fp_score_std" => self.scores.fp_std = num(value)?,
            "field_width" => self.field.0 = num(value)?,
            "field_height" => self.field.1 = num(value)?,
            "target" => {
                let v = list(value, 8)?;
                let frame = |x: f64| {
                    if x >= 0.0 && x.fract() == 0.0 && x <= u32::MAX as f64 {
                        Ok(x as u32)
                    } else {
                        Err(format!("target: bad frame number {x}"))
                    }
                };
                let initial = BBox::new(v[2], v[3], v[4], v[5]).map_err(|e| e.to_string())?;
                self.targets.push(TargetSpec {
                    birth: frame(v[0])?,
                    death: frame(v[1])?,
                    initial,
                    velocity: (v[6], v[7]),
                });
            }
            "pan" => {
                let v = list(value, 3)?;
                if !(v[0] >= 0.0 && v[0].fract() == 0.0 && v[0] <= u32::MAX as f64) {
                    return Err(format!("pan: bad frame number {}", v[0]));
                }
                self.pans.push(PanEvent {
                    frame: v[0] as u32,
                    du: v[1],
                    dv: v[2],
                });
            }
            _ => return Err(format!("unknown key {key:?}")),
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let s = &self.scores;
        let _ = writeln!(out, "name = {}", self.name);
        let _ = writeln!(out, "frames = {}", self.frames);
        let _ = writeln!(out, "seed = {}", self.seed);
        let _ = writeln!(out, "noise = {}", self.noise);
        let _ = writeln!(out, "fp_rate = {}", self.fp_rate);
        let _ = writeln!(out, "miss_rate = {}", self.miss_rate);
        let _ = writeln!(out, "occluded_miss_rate = {}", self.occluded_miss_rate);
        let _ = writeln!(out, "tp_score_mean = {}", s.tp_mean);
        let _ = writeln!(out, "tp_score_std = {}", s.tp_std);
        let _ = writeln!(out, "fp_score_mean = {}", s.fp_mean);
        let _ = writeln!(out, "fp_score_std = {}", s.fp_std);
        let _ = writeln!(out, "field_width = {}", self.field.0);
        let _ = writeln!(out, "field_height = {}", self.field.1);
        for t in &self.targets {
            let b = &t.initial;
            let _ = writeln!(
                out,
                "target = {},{},{},{},{},{},{},{}",
                t.birth, t.death, b.u, b.v, b.w, b.h, t.velocity.0, t.velocity.1
            );
        }
        for p in &self.pans {
            let _ = writeln!(out, "pan = {},{},{}", p.frame, p.du, p.dv);
        }
        out
    }
}

fn truncated(rng: &mut ChaCha8Rng, mean: f64, std: f64) -> f64 {
    let x = if std > 0.0 {
        Normal::new(mean, std).map_or(mean, |n| n.sample(rng))
    } else {
        mean
    };
    x.clamp(0.0, 1.0)
}

/// Fraction of each box covered by any box nearer the camera. A box is
/// nearer when its bottom edge is lower in the image; ties go to the later
/// index.
pub fn front_cover(boxes: &[BBox]) -> Vec<f64> {
    boxes
        .iter()
        .enumerate()
        .map(|(i, b)| {
            boxes
                .iter()
                .enumerate()
                .filter(|&(j, o)| {
                    j != i && (o.bottom() > b.bottom() || (o.bottom() == b.bottom() && j > i))
                })
                .map(|(_, o)| intersection_area(b, o) / b.area())
                .fold(0.0, f64::max)
                .min(1.0)
        })
        .collect()
}

/// Generates ground truth and detections. Deterministic in `spec.seed`.
pub fn generate(spec: &ScenarioSpec) -> Result<Scenario> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let fp_count = if spec.fp_rate > 0.0 {
        Some(Poisson::new(spec.fp_rate).map_err(|e| Error::Scenario(e.to_string()))?)
    } else {
        None
    };

    let mut gt = Vec::with_capacity(spec.frames as usize);
    let mut dets = Vec::with_capacity(spec.frames as usize);
    let mut diagnostics = Vec::with_capacity(spec.frames as usize);
    let mut offset = (0.0, 0.0);

    for frame in 1..=spec.frames {
        let mut pan = (0.0, 0.0);
        for p in spec.pans.iter().filter(|p| p.frame == frame) {
            pan.0 += p.du;
            pan.1 += p.dv;
        }
        offset.0 += pan.0;
        offset.1 += pan.1;

        let alive: Vec<(u64, BBox)> = spec
            .targets
            .iter()
            .enumerate()
            .filter(|(_, t)| (t.birth..=t.death).contains(&frame))
            .map(|(i, t)| {
                let dt = (frame - t.birth) as f64;
                let b = t.initial.translated(
                    t.velocity.0 * dt + offset.0,
                    t.velocity.1 * dt + offset.1,
                );
                (i as u64 + 1, b)
            })
            .collect();
        let boxes: Vec<BBox> = alive.iter().map(|(_, b)| *b).collect();
        let cover = front_cover(&boxes);

        let mut frame_gt = Vec::with_capacity(alive.len());
        let mut frame_dets = Vec::with_capacity(alive.len());
        let mut missed = 0;
        for (k, &(id, b)) in alive.iter().enumerate() {
            let visibility = 1.0 - cover[k];
            frame_gt.push(LabeledBox {
                id,
                bbox: b,
                confidence: visibility,
            });
            let miss_p = if cover[k] > OCCLUDED_COVER {
                spec.occluded_miss_rate
            } else {
                spec.miss_rate
            };
            if miss_p > 0.0 && rng.random::<f64>() < miss_p {
                missed += 1;
                continue;
            }
            let bbox = if spec.noise > 0.0 {
                let jitter = Normal::new(0.0, spec.noise * b.h)
                    .map_err(|e| Error::Scenario(e.to_string()))?;
                BBox::new(
                    b.u + jitter.sample(&mut rng),
                    b.v + jitter.sample(&mut rng),
                    (b.w + jitter.sample(&mut rng) * b.w / b.h).max(1.0),
                    (b.h + jitter.sample(&mut rng)).max(1.0),
                )?
            } else {
                b
            };
            let score = truncated(&mut rng, spec.scores.tp_mean, spec.scores.tp_std) * visibility;
            frame_dets.push(Detection { bbox, score, frame });
        }

        let n_fp = fp_count.as_ref().map_or(0, |p| p.sample(&mut rng) as usize);
        for _ in 0..n_fp {
            let w = rng.random_range(20.0..80.0);
            let h = w * rng.random_range(2.0..3.0);
            let u = rng.random_range(0.0..spec.field.0);
            let v = rng.random_range(0.0..spec.field.1);
            let score = truncated(&mut rng, spec.scores.fp_mean, spec.scores.fp_std);
            frame_dets.push(Detection {
                bbox: BBox::new(u, v, w, h)?,
                score,
                frame,
            });
        }

        diagnostics.push(FrameDiagnostics {
            frame,
            pan,
            offset,
            detections: frame_dets.len(),
            missed,
            false_positives: n_fp,
        });
        gt.push(LabeledFrame {
            frame,
            boxes: frame_gt,
        });
        dets.push(FrameDetections {
            frame,
            detections: frame_dets,
        });
    }

    Ok(Scenario {
        spec: spec.clone(),
        gt,
        dets,
        diagnostics,
    })
}

pub fn format_diagnostics(diags: &[FrameDiagnostics]) -> String {
    let mut out = String::from("frame,pan_du,pan_dv,offset_u,offset_v,detections,missed,false_positives\n");
    for d in diags {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            d.frame, d.pan.0, d.pan.1, d.offset.0, d.offset.1, d.detections, d.missed, d.false_positives
        );
    }
    out
}

#[allow(clippy::too_many_arguments)]
fn target(birth: u32, death: u32, u: f64, v: f64, w: f64, h: f64, vu: f64, vv: f64) -> TargetSpec {
    TargetSpec {
        birth,
        death,
        initial: BBox { u, v, w, h },
        velocity: (vu, vv),
    }
}

/// Noiseless, non-overlapping targets in separate lanes.
pub fn static_separated() -> ScenarioSpec {
    ScenarioSpec {
        name: "static_separated".into(),
        frames: 100,
        targets: vec![
            target(1, 100, 100.0, 120.0, 50.0, 120.0, 3.0, 0.0),
            target(1, 80, 1500.0, 320.0, 60.0, 140.0, -2.5, 0.0),
            target(10, 100, 300.0, 520.0, 45.0, 110.0, 4.0, 0.2),
            target(20, 70, 1700.0, 720.0, 70.0, 160.0, -5.0, 0.0),
            target(1, 100, 900.0, 920.0, 55.0, 130.0, 1.0, -0.3),
        ],
        scores: ScoreModel {
            tp_std: 0.0,
            ..ScoreModel::default()
        },
        seed: 1,
        ..ScenarioSpec::default()
    }
}

/// Abrupt camera pans over a mix of box sizes moving in parallel. Misses are
/// off so every identity error comes from the pans.
pub fn pan_burst() -> ScenarioSpec {
    let widths = [120.0, 100.0, 90.0, 56.0, 52.0, 48.0, 44.0, 40.0, 38.0, 36.0];
    let targets = widths
        .iter()
        .enumerate()
        .map(|(i, &w)| {
            let col = (i % 5) as f64;
            let row = (i / 5) as f64;
            target(1, 200, 250.0 + 330.0 * col, 250.0 + 450.0 * row, w, 2.5 * w, 1.0, 0.3)
        })
        .collect();
    ScenarioSpec {
        name: "pan_burst".into(),
        frames: 200,
        targets,
        pans: vec![
            PanEvent { frame: 50, du: 40.0, dv: 0.0 },
            PanEvent { frame: 100, du: -45.0, dv: 10.0 },
            PanEvent { frame: 150, du: 42.0, dv: -8.0 },
        ],
        noise: 0.01,
        fp_rate: 0.5,
        miss_rate: 0.0,
        occluded_miss_rate: 0.5,
        scores: ScoreModel {
            tp_std: 0.05,
            ..ScoreModel::default()
        },
        seed: 11,
        ..ScenarioSpec::default()
    }
}

/// A large near target passes in front of a smaller far one, covering it
/// completely for five frames.
pub fn crossing_occlusion() -> ScenarioSpec {
    ScenarioSpec {
        name: "crossing_occlusion".into(),
        frames: 100,
        targets: vec![
            // occluder: bottom edge at 475
            target(1, 100, 200.0, 400.0, 60.0, 150.0, 2.0, 0.0),
            // hidden target: bottom edge at 440, moving the other way
            target(1, 100, 400.0, 390.0, 40.0, 100.0, -2.0, 0.0),
            target(1, 100, 1400.0, 800.0, 50.0, 120.0, -1.0, 0.0),
        ],
        occluded_miss_rate: 1.0,
        scores: ScoreModel {
            tp_std: 0.0,
            ..ScoreModel::default()
        },
        seed: 5,
        ..ScenarioSpec::default()
    }
}

/// Many targets, frequent misses, noisy boxes, spread-out scores and
/// false positives.
pub fn dense_noisy() -> ScenarioSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let targets = (0..20)
        .map(|i| {
            let w = rng.random_range(40.0..90.0);
            let h = w * rng.random_range(2.2..2.8);
            let u = 150.0 + 85.0 * i as f64 + rng.random_range(-20.0..20.0);
            let v = rng.random_range(200.0..900.0);
            let vu = rng.random_range(-2.0..2.0);
            let vv = rng.random_range(-0.5..0.5);
            let birth = 1 + rng.random_range(0..30u32);
            let death = 150 - rng.random_range(0..30u32);
            target(birth, death, u, v, w, h, vu, vv)
        })
        .collect();
    ScenarioSpec {
        name: "dense_noisy".into(),
        frames: 150,
        targets,
        noise: 0.02,
        fp_rate: 4.0,
        miss_rate: 0.05,
        occluded_miss_rate: 0.6,
        scores: ScoreModel {
            tp_mean: 0.75,
            tp_std: 0.2,
            ..ScoreModel::default()
        },
        seed: 23,
        ..ScenarioSpec::default()
    }
}

pub fn standard_suite() -> Vec<ScenarioSpec> {
    vec![static_separated(), pan_burst(), crossing_occlusion(), dense_noisy()]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::covered_ratio;

    #[test]
    fn noiseless_detections_equal_ground_truth() {
        let s = generate(&static_separated()).unwrap();
        for (g, d) in s.gt.iter().zip(&s.dets) {
            assert_eq!(g.boxes.len(), d.detections.len());
            for (gb, db) in g.boxes.iter().zip(&d.detections) {
                assert_eq!(gb.bbox, db.bbox);
                assert!(db.score > 0.6);
            }
        }
    }

    #[test]
    fn pan_shifts_every_box_from_its_frame() {
        let mut spec = static_separated();
        spec.pans = vec![PanEvent { frame: 50, du: 40.0, dv: 0.0 }];
        let base = generate(&static_separated()).unwrap();
        let panned = generate(&spec).unwrap();
        for (b, p) in base.gt.iter().zip(&panned.gt) {
            for (bb, pb) in b.boxes.iter().zip(&p.boxes) {
                let expect = if b.frame >= 50 { 40.0 } else { 0.0 };
                assert_eq!(pb.bbox.u - bb.bbox.u, expect);
                assert_eq!(pb.bbox.v, bb.bbox.v);
            }
        }
        for (b, p) in base.dets.iter().zip(&panned.dets) {
            for (bd, pd) in b.detections.iter().zip(&p.detections) {
                let expect = if b.frame >= 50 { 40.0 } else { 0.0 };
                assert_eq!(pd.bbox.u - bd.bbox.u, expect);
            }
        }
        assert_eq!(panned.diagnostics[49].pan, (40.0, 0.0));
    }

    #[test]
    fn false_positive_count_concentrates() {
        let spec = ScenarioSpec {
            frames: 100,
            fp_rate: 2.0,
            seed: 99,
            ..ScenarioSpec::default()
        };
        let s = generate(&spec).unwrap();
        let total: usize = s.diagnostics.iter().map(|d| d.false_positives).sum();
        assert!((160..=240).contains(&total), "{total}");
        let fp_scores: Vec<f64> = s.dets.iter().flat_map(|f| f.detections.iter().map(|d| d.score)).collect();
        let below = fp_scores.iter().filter(|&&x| x <= 0.1).count();
        assert!(below * 2 > fp_scores.len());
    }

    #[test]
    fn generation_is_deterministic() {
        for spec in standard_suite() {
            assert_eq!(generate(&spec).unwrap(), generate(&spec).unwrap());
        }
    }

    #[test]
    fn suite_contents() {
        let suite = standard_suite();
        assert!(suite.len() >= 4);
        let names: Vec<_> = suite.iter().map(|s| s.name.as_str()).collect();
        for n in ["static_separated", "pan_burst", "crossing_occlusion", "dense_noisy"] {
            assert!(names.contains(&n));
        }
        let max_pan = pan_burst()
            .pans
            .iter()
            .map(|p| p.du.abs().max(p.dv.abs()))
            .fold(0.0, f64::max);
        assert!(max_pan >= 30.0);
    }

    #[test]
    fn crossing_fully_covers_the_far_target_for_five_frames() {
        let s = generate(&crossing_occlusion()).unwrap();
        let full = s
            .gt
            .iter()
            .filter(|f| {
                let hidden = f.boxes.iter().find(|b| b.id == 2).unwrap();
                let others: Vec<BBox> = f.boxes.iter().filter(|b| b.id != 2).map(|b| b.bbox).collect();
                covered_ratio(&hidden.bbox, &others) == 1.0
            })
            .count();
        assert_eq!(full, 5);
        // The far target produces no detection while mostly covered.
        let missed: usize = s.diagnostics.iter().map(|d| d.missed).sum();
        assert!(missed >= 5);
    }

    #[test]
    fn spec_text_round_trip() {
        for spec in standard_suite() {
            assert_eq!(ScenarioSpec::parse(&spec.to_text()).unwrap(), spec);
        }
    }

    #[test]
    fn validation_errors() {
        let err = ScenarioSpec::parse("frames = 0\n").unwrap_err();
        assert!(err.to_string().contains("frames"));
        let err = ScenarioSpec::parse("frames = 10\ntarget = 5,3,0,0,10,10,0,0\n").unwrap_err();
        assert!(err.to_string().contains("birth"));
        let err = ScenarioSpec::parse("frames = 10\nmiss_rate = abc\n").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
        assert!(ScenarioSpec::parse("miss_rate = 1.5\n").is_err());
    }
}

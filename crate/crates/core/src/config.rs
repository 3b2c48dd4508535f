//! Tracker thresholds and switches, plus the flat `key = value` text format
//! used by config files and `--set` overrides.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::motion::KalmanParams;

#[derive(Debug, Clone, PartialEq)]
pub struct TrackerConfig {
    /// Detections scoring above this enter the first matching stage.
    pub high_score: f64,
    /// Detections scoring at or below this are discarded.
    pub low_score: f64,
    /// Unmatched detections scoring above this start new tracks.
    pub new_track_score: f64,
    /// Covered-ratio threshold for occlusion and for keeping lost tracks.
    pub covered_ratio: f64,
    /// Tracklet-confidence threshold for occlusion.
    pub confidence: f64,
    pub stage1_min_niou: f64,
    pub stage2_min_niou: f64,
    pub prune_patience: u32,
    pub camera_motion_removal: bool,
    pub occlusion_handling: bool,
    pub low_score_matching: bool,
    pub carry_unmatched_detections: bool,
    /// Fraction trimmed from each tail of the shift distribution; 0 is a plain mean.
    pub cmr_trim_fraction: f64,
    pub kalman: KalmanParams,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        TrackerConfig {
            high_score: 0.6,
            low_score: 0.1,
            new_track_score: 0.8,
            covered_ratio: 0.7,
            confidence: 2.0,
            stage1_min_niou: 0.0,
            stage2_min_niou: 0.4,
            prune_patience: 3,
            camera_motion_removal: true,
            occlusion_handling: true,
            low_score_matching: true,
            carry_unmatched_detections: false,
            cmr_trim_fraction: 0.0,
            kalman: KalmanParams::default(),
        }
    }
}

/// Config keys in canonical order. The short threshold names follow the
/// usual notation for this tracker family.
pub const KEYS: &[&str] = &[
    "L_h",
    "L_l",
    "L_n",
    "L_cr",
    "L_c",
    "stage1_min_niou",
    "stage2_min_niou",
    "prune_patience",
    "camera_motion_removal",
    "occlusion_handling",
    "low_score_matching",
    "carry_unmatched_detections",
    "cmr_trim_fraction",
    "kf_std_weight_position",
    "kf_std_weight_velocity",
    "kf_std_aspect",
    "kf_std_aspect_velocity",
    "kf_init_position_scale",
    "kf_init_velocity_variance_ratio",
];

fn parse_f64(key: &str, value: &str) -> Result<f64> {
    value
        .trim()
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| Error::Config(format!("{key}: expected a number, got {value:?}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.trim() {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        other => Err(Error::Config(format!("{key}: expected a boolean, got {other:?}"))),
    }
}

impl TrackerConfig {
    pub fn validate(&self) -> Result<()> {
        let unit = |name: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} = {v} must lie in [0, 1]")))
            }
        };
        unit("L_h", self.high_score)?;
        unit("L_l", self.low_score)?;
        unit("L_n", self.new_track_score)?;
        if self.low_score >= self.high_score {
            return Err(Error::Config(format!(
                "L_l = {} must be below L_h = {}",
                self.low_score, self.high_score
            )));
        }
        if !(self.covered_ratio > 0.0 && self.covered_ratio < 1.0) {
            return Err(Error::Config(format!(
                "L_cr = {} must lie in (0, 1)",
                self.covered_ratio
            )));
        }
        if self.confidence <= 0.0 {
            return Err(Error::Config(format!("L_c = {} must be positive", self.confidence)));
        }
        if self.prune_patience < 1 {
            return Err(Error::Config("prune_patience must be at least 1".into()));
        }
        if !(0.0..0.5).contains(&self.cmr_trim_fraction) {
            return Err(Error::Config(format!(
                "cmr_trim_fraction = {} must lie in [0, 0.5)",
                self.cmr_trim_fraction
            )));
        }
        let k = &self.kalman;
        let kalman_positive = [
            k.std_weight_position,
            k.std_weight_velocity,
            k.std_aspect,
            k.std_aspect_velocity,
            k.init_position_scale,
            k.init_velocity_variance_ratio,
        ];
        if kalman_positive.iter().any(|&v| !v.is_finite() || v <= 0.0) {
            return Err(Error::Config("Kalman noise parameters must be positive".into()));
        }
        Ok(())
    }

    /// Sets one field by its config-file key. Does not validate the whole config.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim();
        match key {
            "L_h" => self.high_score = parse_f64(key, value)?,
            "L_l" => self.low_score = parse_f64(key, value)?,
            "L_n" => self.new_track_score = parse_f64(key, value)?,
            "L_cr" => self.covered_ratio = parse_f64(key, value)?,
            "L_c" => self.confidence = parse_f64(key, value)?,
            "stage1_min_niou" => self.stage1_min_niou = parse_f64(key, value)?,
            "stage2_min_niou" => self.stage2_min_niou = parse_f64(key, value)?,
            "prune_patience" => {
                self.prune_patience = value.trim().parse().map_err(|_| {
                    Error::Config(format!("{key}: expected a positive integer, got {value:?}"))
                })?
            }
            "camera_motion_removal" => self.camera_motion_removal = parse_bool(key, value)?,
            "occlusion_handling" => self.occlusion_handling = parse_bool(key, value)?,
            "low_score_matching" => self.low_score_matching = parse_bool(key, value)?,
            "carry_unmatched_detections" => {
                self.carry_unmatched_detections = parse_bool(key, value)?
            }
            "cmr_trim_fraction" => self.cmr_trim_fraction = parse_f64(key, value)?,
            "kf_std_weight_position" => self.kalman.std_weight_position = parse_f64(key, value)?,
            "kf_std_weight_velocity" => self.kalman.std_weight_velocity = parse_f64(key, value)?,
            "kf_std_aspect" => self.kalman.std_aspect = parse_f64(key, value)?,
            "kf_std_aspect_velocity" => self.kalman.std_aspect_velocity = parse_f64(key, value)?,
            "kf_init_position_scale" => self.kalman.init_position_scale = parse_f64(key, value)?,
            "kf_init_velocity_variance_ratio" => {
                self.kalman.init_velocity_variance_ratio = parse_f64(key, value)?
            }
            _ => return Err(Error::Config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    /// Applies a `key=value` assignment.
    pub fn apply_override(&mut self, assignment: &str) -> Result<()> {
        let (key, value) = assignment
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("expected key=value, got {assignment:?}")))?;
        self.set(key, value)
    }

    /// Parses config text on top of the defaults. Blank lines and `#`
    /// comments are ignored.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = TrackerConfig::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            cfg.apply_override(line)
                .map_err(|e| Error::Config(format!("line {}: {e}", n + 1)))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn get(&self, key: &str) -> Option<String> {
        let k = &self.kalman;
        let s = match key {
            "L_h" => self.high_score.to_string(),
            "L_l" => self.low_score.to_string(),
            "L_n" => self.new_track_score.to_string(),
            "L_cr" => self.covered_ratio.to_string(),
            "L_c" => self.confidence.to_string(),
            "stage1_min_niou" => self.stage1_min_niou.to_string(),
            "stage2_min_niou" => self.stage2_min_niou.to_string(),
            "prune_patience" => self.prune_patience.to_string(),
            "camera_motion_removal" => self.camera_motion_removal.to_string(),
            "occlusion_handling" => self.occlusion_handling.to_string(),
            "low_score_matching" => self.low_score_matching.to_string(),
            "carry_unmatched_detections" => self.carry_unmatched_detections.to_string(),
            "cmr_trim_fraction" => self.cmr_trim_fraction.to_string(),
            "kf_std_weight_position" => k.std_weight_position.to_string(),
            "kf_std_weight_velocity" => k.std_weight_velocity.to_string(),
            "kf_std_aspect" => k.std_aspect.to_string(),
            "kf_std_aspect_velocity" => k.std_aspect_velocity.to_string(),
            "kf_init_position_scale" => k.init_position_scale.to_string(),
            "kf_init_velocity_variance_ratio" => k.init_velocity_variance_ratio.to_string(),
            _ => return None,
        };
        Some(s)
    }

    /// Serializes every key; `parse(to_text())` reproduces the config exactly.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for key in KEYS {
            let _ = writeln!(out, "{key} = {}", self.get(key).unwrap_or_default());
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        TrackerConfig::default().validate().unwrap();
    }

    #[test]
    fn text_round_trip() {
        let mut cfg = TrackerConfig::default();
        cfg.high_score = 0.7;
        cfg.stage2_min_niou = 0.123456789;
        cfg.occlusion_handling = false;
        let back = TrackerConfig::parse(&cfg.to_text()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn rejects_inverted_score_thresholds() {
        let mut cfg = TrackerConfig::default();
        cfg.apply_override("L_l=0.6").unwrap();
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn parse_reports_line() {
        let err = TrackerConfig::parse("# thresholds\nL_h = 0.7\nbogus = 1\n").unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
    }

    #[test]
    fn override_needs_equals() {
        assert!(TrackerConfig::default().apply_override("L_h").is_err());
    }
}

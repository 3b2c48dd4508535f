//! Global camera shift estimated from matched detection/prediction pairs,
//! and the second association pass run on shifted predictions.

use crate::association::{cascade_match, Detection, MatchResult, TrackId};
use crate::config::TrackerConfig;
use crate::geometry::BBox;

/// Mean signed displacement of detections relative to their predictions.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CameraMotionEstimate {
    pub du: f64,
    pub dv: f64,
    pub support: usize,
}

/// Plain mean of `(det - pred)` center differences over `(det, pred)` pairs.
pub fn estimate_shift(pairs: &[(BBox, BBox)]) -> CameraMotionEstimate {
    estimate_shift_trimmed(pairs, 0.0)
}

/// Per-axis mean after dropping `floor(n * trim)` values from each tail.
pub fn estimate_shift_trimmed(pairs: &[(BBox, BBox)], trim: f64) -> CameraMotionEstimate {
    if pairs.is_empty() {
        return CameraMotionEstimate::default();
    }
    let mut du: Vec<f64> = pairs.iter().map(|(d, p)| d.u - p.u).collect();
    let mut dv: Vec<f64> = pairs.iter().map(|(d, p)| d.v - p.v).collect();
    let cut = (pairs.len() as f64 * trim).floor() as usize;
    if cut == 0 || 2 * cut >= pairs.len() {
        return CameraMotionEstimate {
            du: mean(&du),
            dv: mean(&dv),
            support: pairs.len(),
        };
    }
    du.sort_by(f64::total_cmp);
    dv.sort_by(f64::total_cmp);
    let keep = cut..pairs.len() - cut;
    CameraMotionEstimate {
        du: mean(&du[keep.clone()]),
        dv: mean(&dv[keep.clone()]),
        support: keep.len(),
    }
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Translates every predicted box by the estimated shift.
pub fn apply_shift(
    predicted: &[(TrackId, BBox)],
    shift: &CameraMotionEstimate,
) -> Vec<(TrackId, BBox)> {
    predicted
        .iter()
        .map(|&(id, b)| (id, b.translated(shift.du, shift.dv)))
        .collect()
}

/// Match, estimate the shift from the matches, shift all predictions and
/// match again from scratch. Returns the second pass.
pub fn rematch_with_compensation(
    dets: &[Detection],
    predicted: &[(TrackId, BBox)],
    config: &TrackerConfig,
) -> (MatchResult, CameraMotionEstimate) {
    let first = cascade_match(dets, predicted, config);
    if first.matches.is_empty() {
        return (first, CameraMotionEstimate::default());
    }
    let shift = estimate_shift_trimmed(
        &matched_pairs(&first, dets, predicted),
        config.cmr_trim_fraction,
    );
    let shifted = apply_shift(predicted, &shift);
    (cascade_match(dets, &shifted, config), shift)
}

/// `(detection box, predicted box)` for every match in `result`.
pub fn matched_pairs(
    result: &MatchResult,
    dets: &[Detection],
    predicted: &[(TrackId, BBox)],
) -> Vec<(BBox, BBox)> {
    result
        .matches
        .iter()
        .filter_map(|&(id, di)| {
            predicted
                .iter()
                .find(|(pid, _)| *pid == id)
                .map(|(_, p)| (dets[di].bbox, *p))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bx(u: f64, v: f64, w: f64, h: f64) -> BBox {
        BBox::new(u, v, w, h).unwrap()
    }

    #[test]
    fn mean_of_signed_differences() {
        let pairs = [
            (bx(12.0, 9.0, 10.0, 10.0), bx(10.0, 10.0, 10.0, 10.0)),
            (bx(54.0, 47.0, 10.0, 10.0), bx(50.0, 50.0, 10.0, 10.0)),
        ];
        let e = estimate_shift(&pairs);
        assert_eq!((e.du, e.dv, e.support), (3.0, -2.0, 2));
    }

    #[test]
    fn empty_and_zero_shift() {
        assert_eq!(estimate_shift(&[]), CameraMotionEstimate::default());
        let b = bx(10.0, 10.0, 5.0, 5.0);
        let e = estimate_shift(&[(b, b), (b, b)]);
        assert_eq!((e.du, e.dv), (0.0, 0.0));
    }

    #[test]
    fn injected_shift_is_recovered() {
        let preds: Vec<BBox> = (0..8)
            .map(|i| bx(37.3 * i as f64 + 11.0, 500.0 - 13.7 * i as f64, 20.0 + i as f64, 60.0))
            .collect();
        let pairs: Vec<_> = preds.iter().map(|p| (p.translated(12.0, -7.0), *p)).collect();
        let e = estimate_shift(&pairs);
        assert!((e.du - 12.0).abs() < 1e-9 && (e.dv + 7.0).abs() < 1e-9);
    }

    #[test]
    fn apply_shift_translates_only() {
        let preds = [(TrackId(1), bx(5.0, 5.0, 10.0, 10.0))];
        let none = apply_shift(&preds, &CameraMotionEstimate::default());
        assert_eq!(none, preds.to_vec());
        let s = CameraMotionEstimate { du: 3.0, dv: -2.0, support: 1 };
        assert_eq!(apply_shift(&preds, &s)[0].1, bx(8.0, 3.0, 10.0, 10.0));
    }

    #[test]
    fn shift_then_estimate_is_fixed_point() {
        let preds: Vec<(TrackId, BBox)> = (0..5)
            .map(|i| (TrackId(i), bx(100.0 * i as f64, 40.0, 30.0, 80.0)))
            .collect();
        let dets: Vec<BBox> = preds.iter().map(|(_, p)| p.translated(17.25, 4.5)).collect();
        let before: Vec<_> = dets.iter().zip(&preds).map(|(d, (_, p))| (*d, *p)).collect();
        let shift = estimate_shift(&before);
        let shifted = apply_shift(&preds, &shift);
        let after: Vec<_> = dets.iter().zip(&shifted).map(|(d, (_, p))| (*d, *p)).collect();
        let residual = estimate_shift(&after);
        assert!(residual.du.abs() < 1e-9 && residual.dv.abs() < 1e-9);
    }

    #[test]
    fn trimmed_mean_drops_outliers() {
        let p = bx(0.0, 0.0, 10.0, 10.0);
        let mut pairs: Vec<_> = (0..8).map(|_| (p.translated(5.0, 1.0), p)).collect();
        pairs.push((p.translated(500.0, -300.0), p));
        pairs.push((p.translated(-400.0, 200.0), p));
        let e = estimate_shift_trimmed(&pairs, 0.1);
        assert_eq!((e.du, e.dv, e.support), (5.0, 1.0, 8));
    }

    fn high(b: BBox) -> Detection {
        Detection::new(b, 0.9, 1).unwrap()
    }

    #[test]
    fn no_detections_gives_no_matches() {
        let preds = [(TrackId(1), bx(5.0, 5.0, 10.0, 10.0))];
        let (r, s) = rematch_with_compensation(&[], &preds, &TrackerConfig::default());
        assert!(r.matches.is_empty());
        assert_eq!(r.unmatched_tracks, vec![TrackId(1)]);
        assert_eq!(s, CameraMotionEstimate::default());
    }

    #[test]
    fn static_scene_second_pass_equals_first() {
        let preds: Vec<_> = (0..4)
            .map(|i| (TrackId(i), bx(200.0 * i as f64, 100.0, 40.0, 90.0)))
            .collect();
        let dets: Vec<_> = preds.iter().map(|(_, b)| high(b.translated(0.5, -0.5))).collect();
        let cfg = TrackerConfig::default();
        let (second, _) = rematch_with_compensation(&dets, &preds, &cfg);
        assert_eq!(second, cascade_match(&dets, &preds, &cfg));
    }

    #[test]
    fn large_targets_anchor_the_shift_for_small_ones() {
        // nIoU of a pure 40 px horizontal shift stays positive only for
        // widths above ~57 px; the three wide boxes match first.
        let widths = [200.0, 120.0, 60.0, 50.0, 40.0, 36.0, 30.0, 24.0, 20.0, 16.0];
        let preds: Vec<_> = widths
            .iter()
            .enumerate()
            .map(|(i, &w)| (TrackId(i as u64), bx(300.0 * i as f64, 400.0, w, 2.5 * w)))
            .collect();
        let dets: Vec<_> = preds.iter().map(|(_, b)| high(b.translated(40.0, 0.0))).collect();
        let cfg = TrackerConfig::default();
        let first = cascade_match(&dets, &preds, &cfg);
        assert_eq!(first.matches.len(), 3);
        let (second, shift) = rematch_with_compensation(&dets, &preds, &cfg);
        assert_eq!((shift.du, shift.dv, shift.support), (40.0, 0.0, 3));
        assert_eq!(second.matches.len(), 10);
        assert!(second.matches.iter().all(|&(id, d)| id.0 as usize == d));
    }
}

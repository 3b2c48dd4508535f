use proptest::prelude::*;

use relmot::assignment::{solve_assignment, Matrix};
use relmot::association::{cascade_match, split_by_score};
use relmot::geometry::{covered_ratio, intersection_area, iou, niou};
use relmot::{run_sequence, BBox, Detection, FrameDetections, TrackId, TrackerConfig};

fn bbox() -> impl Strategy<Value = BBox> {
    (-300.0..300.0f64, -300.0..300.0f64, 1.0..150.0f64, 1.0..150.0f64)
        .prop_map(|(u, v, w, h)| BBox::new(u, v, w, h).unwrap())
}

fn rel_eq(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * (1.0 + a.abs().max(b.abs()))
}

proptest! {
    #[test]
    fn intersection_is_symmetric_and_bounded(a in bbox(), b in bbox()) {
        let i = intersection_area(&a, &b);
        prop_assert_eq!(i, intersection_area(&b, &a));
        prop_assert!(i >= 0.0 && i <= a.area().min(b.area()) * (1.0 + 1e-12));
    }

    #[test]
    fn niou_never_exceeds_iou(a in bbox(), b in bbox()) {
        prop_assert!(niou(&a, &b) <= iou(&a, &b));
        prop_assert_eq!(niou(&a, &a), 1.0);
    }

    #[test]
    fn scale_invariance(a in bbox(), b in bbox(), k in 0.01..50.0f64) {
        let sc = |x: &BBox| BBox::new(x.u * k, x.v * k, x.w * k, x.h * k).unwrap();
        prop_assert!(rel_eq(iou(&sc(&a), &sc(&b)), iou(&a, &b)));
        prop_assert!(rel_eq(niou(&sc(&a), &sc(&b)), niou(&a, &b)));
        prop_assert!(rel_eq(covered_ratio(&sc(&a), &[sc(&b)]), covered_ratio(&a, &[b])));
    }

    #[test]
    fn covered_ratio_ignores_order_and_grows(t in bbox(), others in prop::collection::vec(bbox(), 0..6), extra in bbox()) {
        let cr = covered_ratio(&t, &others);
        let mut rev = others.clone();
        rev.reverse();
        prop_assert_eq!(cr, covered_ratio(&t, &rev));
        let mut more = others.clone();
        more.push(extra);
        prop_assert!(covered_ratio(&t, &more) >= cr);
        prop_assert!((0.0..=1.0).contains(&cr));
    }

    #[test]
    fn gated_assignment_is_one_to_one_and_feasible(
        rows in 0usize..6,
        cols in 0usize..6,
        seed in prop::collection::vec(-1.0..1.0f64, 36),
        gate in -0.5..0.8f64,
    ) {
        let m = Matrix::from_fn(rows, cols, |r, c| seed[r * 6 + c]);
        let a = solve_assignment(&m, gate);
        let mut rs: Vec<usize> = a.pairs.iter().map(|p| p.0).chain(a.unmatched_rows.iter().copied()).collect();
        let mut cs: Vec<usize> = a.pairs.iter().map(|p| p.1).chain(a.unmatched_cols.iter().copied()).collect();
        rs.sort_unstable();
        cs.sort_unstable();
        prop_assert_eq!(rs, (0..rows).collect::<Vec<_>>());
        prop_assert_eq!(cs, (0..cols).collect::<Vec<_>>());
        for &(r, c) in &a.pairs {
            prop_assert!(m.get(r, c) >= gate);
        }
        prop_assert_eq!(solve_assignment(&m, gate), a);
    }

    #[test]
    fn cascade_partitions_inputs(
        boxes in prop::collection::vec(bbox(), 0..8),
        scores in prop::collection::vec(0.0..=1.0f64, 8),
        tracks in prop::collection::vec(bbox(), 0..8),
        gate2 in 0.0..1.0f64,
    ) {
        let dets: Vec<Detection> = boxes.iter().zip(&scores).map(|(b, &s)| Detection::new(*b, s, 1).unwrap()).collect();
        let predicted: Vec<(TrackId, BBox)> = tracks.iter().enumerate().map(|(i, b)| (TrackId(i as u64 + 1), *b)).collect();
        let mut cfg = TrackerConfig::default();
        cfg.stage2_min_niou = gate2;
        let r = cascade_match(&dets, &predicted, &cfg);
        let split = split_by_score(&dets, cfg.high_score, cfg.low_score).unwrap();

        let mut det_idx: Vec<usize> = r.matches.iter().map(|m| m.1).chain(r.unmatched_detections.iter().copied()).collect();
        det_idx.sort_unstable();
        let mut kept: Vec<usize> = split.high.iter().chain(&split.low).copied().collect();
        kept.sort_unstable();
        prop_assert_eq!(det_idx, kept);

        let mut ids: Vec<TrackId> = r.matches.iter().map(|m| m.0).chain(r.unmatched_tracks.iter().copied()).collect();
        ids.sort();
        prop_assert_eq!(ids, predicted.iter().map(|p| p.0).collect::<Vec<_>>());
        for &(_, d) in &r.matches {
            prop_assert!(dets[d].score > cfg.low_score);
        }

        // A stricter second-stage gate never adds matches.
        let mut strict = cfg.clone();
        strict.stage2_min_niou = (gate2 + 0.3).min(1.0);
        prop_assert!(cascade_match(&dets, &predicted, &strict).matches.len() <= r.matches.len());
    }

    #[test]
    fn ids_are_unique_per_frame_and_runs_are_causal(
        frames in prop::collection::vec(prop::collection::vec((bbox(), 0.0..=1.0f64), 0..6), 1..15),
    ) {
        let stream: Vec<FrameDetections> = frames
            .iter()
            .enumerate()
            .map(|(i, dets)| {
                let frame = i as u32 + 1;
                FrameDetections {
                    frame,
                    detections: dets.iter().map(|&(b, s)| Detection::new(b, s, frame).unwrap()).collect(),
                }
            })
            .collect();
        let cfg = TrackerConfig::default();
        let full = run_sequence(&cfg, &stream).unwrap();
        for f in &full {
            let mut ids: Vec<TrackId> = f.records.iter().map(|r| r.id).collect();
            let n = ids.len();
            ids.dedup();
            prop_assert_eq!(ids.len(), n);
        }
        let k = stream.len() / 2;
        prop_assert_eq!(&run_sequence(&cfg, &stream[..k]).unwrap()[..], &full[..k]);
    }
}

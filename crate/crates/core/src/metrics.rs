//! CLEAR-MOT and identity (IDF1) metrics.
//!
//! Correspondences are IoU-based. Per frame, last frame's pairs are kept
//! while they still overlap by at least the threshold; the remaining boxes
//! are paired by maximum-IoU assignment. IDF1 pairs whole trajectories
//! through a global assignment on per-frame overlap counts.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use crate::assignment::{solve_assignment, Matrix};
use crate::error::{Error, Result};
use crate::geometry::iou;
use crate::mot_io::{LabeledBox, LabeledFrame};

pub const DEFAULT_IOU_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SequenceMetrics {
    pub mota: f64,
    /// Mean IoU over matched pairs.
    pub motp: f64,
    pub fp: usize,
    pub fn_: usize,
    pub ids: usize,
    pub fm: usize,
    pub mt: usize,
    pub ml: usize,
    pub idf1: f64,
    pub idtp: usize,
    pub idfp: usize,
    pub idfn: usize,
    pub matches: usize,
    pub iou_sum: f64,
    pub gt_total: usize,
    pub hyp_total: usize,
    pub gt_trajectories: usize,
}

#[derive(Default)]
struct GtHistory {
    frames: usize,
    matched: usize,
    last_hyp: Option<u64>,
    currently_matched: bool,
    interrupted: bool,
}

fn frames_by_number(frames: &[LabeledFrame]) -> BTreeMap<u32, &[LabeledBox]> {
    frames.iter().map(|f| (f.frame, f.boxes.as_slice())).collect()
}

/// CLEAR-MOT counts. Identity fields are left at zero.
pub fn clear_mot(
    gt: &[LabeledFrame],
    hyp: &[LabeledFrame],
    iou_threshold: f64,
) -> Result<SequenceMetrics> {
    let gt_by = frames_by_number(gt);
    let hyp_by = frames_by_number(hyp);
    let frames: BTreeSet<u32> = gt_by.keys().chain(hyp_by.keys()).copied().collect();

    let mut m = SequenceMetrics::default();
    let mut history: BTreeMap<u64, GtHistory> = BTreeMap::new();
    let mut previous: BTreeMap<u64, u64> = BTreeMap::new();

    for frame in frames {
        let g = gt_by.get(&frame).copied().unwrap_or(&[]);
        let h = hyp_by.get(&frame).copied().unwrap_or(&[]);
        m.gt_total += g.len();
        m.hyp_total += h.len();

        let mut gt_used = vec![false; g.len()];
        let mut hyp_used = vec![false; h.len()];
        let mut pairs: Vec<(usize, usize, f64)> = Vec::new();

        // Keep last frame's correspondences that still overlap.
        for (gi, gb) in g.iter().enumerate() {
            let Some(&hid) = previous.get(&gb.id) else { continue };
            if let Some(hi) = h.iter().position(|hb| hb.id == hid) {
                let o = iou(&gb.bbox, &h[hi].bbox);
                if !hyp_used[hi] && o >= iou_threshold {
                    gt_used[gi] = true;
                    hyp_used[hi] = true;
                    pairs.push((gi, hi, o));
                }
            }
        }

        let free_g: Vec<usize> = (0..g.len()).filter(|&i| !gt_used[i]).collect();
        let free_h: Vec<usize> = (0..h.len()).filter(|&i| !hyp_used[i]).collect();
        let sim = Matrix::from_fn(free_g.len(), free_h.len(), |r, c| {
            iou(&g[free_g[r]].bbox, &h[free_h[c]].bbox)
        });
        for (r, c) in solve_assignment(&sim, iou_threshold).pairs {
            let (gi, hi) = (free_g[r], free_h[c]);
            gt_used[gi] = true;
            hyp_used[hi] = true;
            let hid = h[hi].id;
            let hist = history.entry(g[gi].id).or_default();
            if hist.last_hyp.is_some_and(|last| last != hid) {
                m.ids += 1;
            }
            pairs.push((gi, hi, sim.get(r, c)));
        }

        previous.clear();
        for &(gi, hi, o) in &pairs {
            previous.insert(g[gi].id, h[hi].id);
            m.matches += 1;
            m.iou_sum += o;
        }

        for (gi, gb) in g.iter().enumerate() {
            let hist = history.entry(gb.id).or_default();
            hist.frames += 1;
            if gt_used[gi] {
                if hist.interrupted {
                    m.fm += 1;
                    hist.interrupted = false;
                }
                hist.matched += 1;
                hist.currently_matched = true;
                hist.last_hyp = previous.get(&gb.id).copied();
            } else {
                m.fn_ += 1;
                if hist.currently_matched {
                    hist.interrupted = true;
                }
                hist.currently_matched = false;
            }
        }
        m.fp += hyp_used.iter().filter(|&&u| !u).count();
    }

    if m.gt_total == 0 {
        return Err(Error::EmptyGroundTruth);
    }
    m.gt_trajectories = history.len();
    for hist in history.values() {
        let ratio = hist.matched as f64 / hist.frames as f64;
        if ratio > 0.8 {
            m.mt += 1;
        } else if ratio < 0.2 {
            m.ml += 1;
        }
    }
    m.mota = 1.0 - (m.fp + m.fn_ + m.ids) as f64 / m.gt_total as f64;
    m.motp = if m.matches > 0 {
        m.iou_sum / m.matches as f64
    } else {
        0.0
    };
    Ok(m)
}

/// Identity true positives, false positives and false negatives.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct IdentityCounts {
    pub idtp: usize,
    pub idfp: usize,
    pub idfn: usize,
}

impl IdentityCounts {
    pub fn idf1(&self) -> f64 {
        let denom = 2 * self.idtp + self.idfp + self.idfn;
        if denom == 0 {
            0.0
        } else {
            2.0 * self.idtp as f64 / denom as f64
        }
    }
}

pub fn identity_counts(
    gt: &[LabeledFrame],
    hyp: &[LabeledFrame],
    iou_threshold: f64,
) -> Result<IdentityCounts> {
    let gt_ids: BTreeSet<u64> = gt.iter().flat_map(|f| f.boxes.iter().map(|b| b.id)).collect();
    let hyp_ids: BTreeSet<u64> = hyp.iter().flat_map(|f| f.boxes.iter().map(|b| b.id)).collect();
    let gt_total: usize = gt.iter().map(|f| f.boxes.len()).sum();
    let hyp_total: usize = hyp.iter().map(|f| f.boxes.len()).sum();
    if gt_total == 0 {
        return Err(Error::EmptyGroundTruth);
    }
    let gt_row: BTreeMap<u64, usize> = gt_ids.iter().enumerate().map(|(i, &id)| (id, i)).collect();
    let hyp_col: BTreeMap<u64, usize> =
        hyp_ids.iter().enumerate().map(|(i, &id)| (id, i)).collect();

    let mut overlap = Matrix::new(gt_ids.len(), hyp_ids.len(), 0.0);
    let hyp_by = frames_by_number(hyp);
    for f in gt {
        let Some(h) = hyp_by.get(&f.frame) else { continue };
        for gb in &f.boxes {
            for hb in h.iter() {
                if iou(&gb.bbox, &hb.bbox) >= iou_threshold {
                    let (r, c) = (gt_row[&gb.id], hyp_col[&hb.id]);
                    overlap.set(r, c, overlap.get(r, c) + 1.0);
                }
            }
        }
    }
    let idtp = solve_assignment(&overlap, 0.0).total(&overlap) as usize;
    Ok(IdentityCounts {
        idtp,
        idfp: hyp_total - idtp,
        idfn: gt_total - idtp,
    })
}

pub fn idf1(gt: &[LabeledFrame], hyp: &[LabeledFrame], iou_threshold: f64) -> Result<f64> {
    Ok(identity_counts(gt, hyp, iou_threshold)?.idf1())
}

/// CLEAR-MOT plus identity metrics for one sequence.
pub fn evaluate(
    gt: &[LabeledFrame],
    hyp: &[LabeledFrame],
    iou_threshold: f64,
) -> Result<SequenceMetrics> {
    let mut m = clear_mot(gt, hyp, iou_threshold)?;
    let id = identity_counts(gt, hyp, iou_threshold)?;
    m.idtp = id.idtp;
    m.idfp = id.idfp;
    m.idfn = id.idfn;
    m.idf1 = id.idf1();
    Ok(m)
}

/// Pools counts over sequences and recomputes the ratios from the sums.
pub fn aggregate(all: &[SequenceMetrics]) -> SequenceMetrics {
    let mut a = SequenceMetrics::default();
    for m in all {
        a.fp += m.fp;
        a.fn_ += m.fn_;
        a.ids += m.ids;
        a.fm += m.fm;
        a.mt += m.mt;
        a.ml += m.ml;
        a.idtp += m.idtp;
        a.idfp += m.idfp;
        a.idfn += m.idfn;
        a.matches += m.matches;
        a.iou_sum += m.iou_sum;
        a.gt_total += m.gt_total;
        a.hyp_total += m.hyp_total;
        a.gt_trajectories += m.gt_trajectories;
    }
    if a.gt_total > 0 {
        a.mota = 1.0 - (a.fp + a.fn_ + a.ids) as f64 / a.gt_total as f64;
    }
    if a.matches > 0 {
        a.motp = a.iou_sum / a.matches as f64;
    }
    a.idf1 = IdentityCounts {
        idtp: a.idtp,
        idfp: a.idfp,
        idfn: a.idfn,
    }
    .idf1();
    a
}

/// Plain-text table; the last row is the pooled aggregate.
pub fn format_table(rows: &[(String, SequenceMetrics)]) -> String {
    let mut out = String::new();
    let width = rows.iter().map(|(n, _)| n.len()).max().unwrap_or(0).max(8);
    let _ = writeln!(
        out,
        "{:<width$} {:>7} {:>7} {:>5} {:>7} {:>5} {:>5} {:>7} {:>7} {:>5} {:>5}",
        "Sequence", "MOTA", "IDF1", "HOTA", "MOTP", "MT", "ML", "FP", "FN", "IDS", "FM"
    );
    let metrics: Vec<SequenceMetrics> = rows.iter().map(|(_, m)| *m).collect();
    let total = aggregate(&metrics);
    let named = rows.iter().map(|(n, m)| (n.as_str(), m));
    for (name, m) in named.chain(std::iter::once(("OVERALL", &total))) {
        let _ = writeln!(
            out,
            "{:<width$} {:>7.3} {:>7.3} {:>5} {:>7.3} {:>5} {:>5} {:>7} {:>7} {:>5} {:>5}",
            name, m.mota, m.idf1, "n/a", m.motp, m.mt, m.ml, m.fp, m.fn_, m.ids, m.fm
        );
    }
    out
}

/// `sequence.key=value` lines, plus `OVERALL.*` for the aggregate.
pub fn format_summary(rows: &[(String, SequenceMetrics)]) -> String {
    let mut out = String::new();
    let metrics: Vec<SequenceMetrics> = rows.iter().map(|(_, m)| *m).collect();
    let total = aggregate(&metrics);
    let named = rows.iter().map(|(n, m)| (n.as_str(), m));
    for (name, m) in named.chain(std::iter::once(("OVERALL", &total))) {
        let _ = writeln!(out, "{name}.mota={:.6}", m.mota);
        let _ = writeln!(out, "{name}.idf1={:.6}", m.idf1);
        let _ = writeln!(out, "{name}.hota=n/a");
        let _ = writeln!(out, "{name}.motp={:.6}", m.motp);
        let _ = writeln!(out, "{name}.mt={}", m.mt);
        let _ = writeln!(out, "{name}.ml={}", m.ml);
        let _ = writeln!(out, "{name}.fp={}", m.fp);
        let _ = writeln!(out, "{name}.fn={}", m.fn_);
        let _ = writeln!(out, "{name}.ids={}", m.ids);
        let _ = writeln!(out, "{name}.fm={}", m.fm);
        let _ = writeln!(out, "{name}.idtp={}", m.idtp);
        let _ = writeln!(out, "{name}.idfp={}", m.idfp);
        let _ = writeln!(out, "{name}.idfn={}", m.idfn);
        let _ = writeln!(out, "{name}.gt={}", m.gt_total);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::BBox;

    fn lb(id: u64, u: f64) -> LabeledBox {
        LabeledBox {
            id,
            bbox: BBox::new(u, 100.0, 20.0, 50.0).unwrap(),
            confidence: 1.0,
        }
    }

    fn frame(n: u32, boxes: Vec<LabeledBox>) -> LabeledFrame {
        LabeledFrame { frame: n, boxes }
    }

    #[test]
    fn perfect_tracker() {
        let gt: Vec<_> = (1..=5)
            .map(|f| frame(f, vec![lb(1, 10.0 * f as f64), lb(2, 300.0)]))
            .collect();
        let m = evaluate(&gt, &gt, 0.5).unwrap();
        assert_eq!(m.mota, 1.0);
        assert_eq!((m.fp, m.fn_, m.ids, m.fm), (0, 0, 0, 0));
        assert_eq!(m.mt, 2);
        assert_eq!(m.idf1, 1.0);
        assert_eq!(m.motp, 1.0);
    }

    #[test]
    fn id_flip_counts_one_switch_no_fragmentation() {
        let gt: Vec<_> = (1..=5).map(|f| frame(f, vec![lb(1, 100.0)])).collect();
        let hyp: Vec<_> = (1..=5)
            .map(|f| frame(f, vec![lb(if f < 3 { 7 } else { 8 }, 100.0)]))
            .collect();
        let m = clear_mot(&gt, &hyp, 0.5).unwrap();
        assert_eq!((m.ids, m.fm, m.fp, m.fn_), (1, 0, 0, 0));
        assert!((m.mota - 0.8).abs() < 1e-12);
    }

    #[test]
    fn fragmentation_counts_resumptions() {
        let gt: Vec<_> = (1..=6).map(|f| frame(f, vec![lb(1, 100.0)])).collect();
        let hyp: Vec<_> = (1..=6)
            .filter(|f| *f != 3)
            .map(|f| frame(f, vec![lb(4, 100.0)]))
            .collect();
        let m = clear_mot(&gt, &hyp, 0.5).unwrap();
        assert_eq!((m.fm, m.fn_, m.ids), (1, 1, 0));
    }

    #[test]
    fn empty_ground_truth_is_an_error() {
        assert!(matches!(clear_mot(&[], &[], 0.5), Err(Error::EmptyGroundTruth)));
        assert!(matches!(idf1(&[], &[], 0.5), Err(Error::EmptyGroundTruth)));
    }

    #[test]
    fn empty_output_scores_zero_idf1() {
        let gt = vec![frame(1, vec![lb(1, 100.0)])];
        assert_eq!(idf1(&gt, &[], 0.5).unwrap(), 0.0);
    }

    #[test]
    fn aggregate_recomputes_mota_from_sums() {
        let a = SequenceMetrics { fp: 1, fn_: 1, ids: 0, gt_total: 10, ..Default::default() };
        let b = SequenceMetrics { fp: 0, fn_: 2, ids: 1, gt_total: 30, ..Default::default() };
        let t = aggregate(&[a, b]);
        assert!((t.mota - (1.0 - 5.0 / 40.0)).abs() < 1e-12);
    }

    #[test]
    fn table_has_na_hota_column() {
        let gt = vec![frame(1, vec![lb(1, 100.0)])];
        let m = evaluate(&gt, &gt, 0.5).unwrap();
        let t = format_table(&[("seq".into(), m)]);
        assert!(t.lines().next().unwrap().contains("HOTA"));
        assert!(t.contains("n/a"));
        assert!(t.lines().last().unwrap().starts_with("OVERALL"));
    }
}

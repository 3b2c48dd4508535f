//! MOTChallenge text formats.
//!
//! All files are comma-separated, one record per line:
//!
//! * detections: `frame,id,x,y,w,h,score,...` (id is -1)
//! * ground truth: `frame,id,x,y,w,h,flag,class,visibility`
//! * results: `frame,id,x,y,w,h,score,-1,-1,-1`
//!
//! `(x, y)` is the top-left corner. Input may use LF or CRLF; output uses LF.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::association::Detection;
use crate::error::{Error, Result};
use crate::geometry::BBox;
use crate::tracker::{FrameDetections, FrameResult};

/// A box with an identity: a ground-truth object or a reported track.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabeledBox {
    pub id: u64,
    pub bbox: BBox,
    /// Visibility for ground truth, score for tracker output.
    pub confidence: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LabeledFrame {
    pub frame: u32,
    pub boxes: Vec<LabeledBox>,
}

impl From<&FrameResult> for LabeledFrame {
    fn from(r: &FrameResult) -> Self {
        LabeledFrame {
            frame: r.frame,
            boxes: r
                .records
                .iter()
                .map(|rec| LabeledBox {
                    id: rec.id.0,
                    bbox: rec.bbox,
                    confidence: rec.score,
                })
                .collect(),
        }
    }
}

/// Counts of rows skipped while reading leniently.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ReadReport {
    pub rows: usize,
    pub malformed: usize,
    pub non_positive_size: usize,
    pub ignored: usize,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ReadOptions {
    /// Abort on the first malformed line instead of skipping it.
    pub strict: bool,
    /// Ground truth only: keep class 1 (pedestrian) rows.
    pub pedestrians_only: bool,
}

enum Row<T> {
    Keep(u32, T),
    NonPositive,
    Ignored,
}

fn field_f64(fields: &[&str], i: usize) -> std::result::Result<f64, String> {
    let raw = fields.get(i).ok_or_else(|| format!("missing field {}", i + 1))?;
    raw.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| format!("field {}: not a number: {raw:?}", i + 1))
}

fn field_int(fields: &[&str], i: usize) -> std::result::Result<i64, String> {
    let v = field_f64(fields, i)?;
    if v.fract() != 0.0 || v.abs() > i64::MAX as f64 {
        return Err(format!("field {}: not an integer: {v}", i + 1));
    }
    Ok(v as i64)
}

fn optional_f64(fields: &[&str], i: usize, default: f64) -> std::result::Result<f64, String> {
    if fields.len() > i {
        field_f64(fields, i)
    } else {
        Ok(default)
    }
}

fn frame_and_box(fields: &[&str]) -> std::result::Result<(u32, Option<BBox>), String> {
    let frame = field_int(fields, 0)?;
    if frame < 1 || frame > u32::MAX as i64 {
        return Err(format!("frame {frame} out of range"));
    }
    let (x, y, w, h) = (
        field_f64(fields, 2)?,
        field_f64(fields, 3)?,
        field_f64(fields, 4)?,
        field_f64(fields, 5)?,
    );
    Ok((frame as u32, BBox::from_tlwh(x, y, w, h).ok()))
}

fn parse_lines<T, F>(
    text: &str,
    path: &Path,
    opts: ReadOptions,
    mut parse_row: F,
) -> Result<(BTreeMap<u32, Vec<T>>, ReadReport)>
where
    F: FnMut(&[&str]) -> std::result::Result<Row<T>, String>,
{
    let mut groups: BTreeMap<u32, Vec<T>> = BTreeMap::new();
    let mut report = ReadReport::default();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        report.rows += 1;
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        match parse_row(&fields) {
            Ok(Row::Keep(frame, item)) => groups.entry(frame).or_default().push(item),
            Ok(Row::NonPositive) => report.non_positive_size += 1,
            Ok(Row::Ignored) => report.ignored += 1,
            Err(message) if opts.strict => {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line: n + 1,
                    message,
                })
            }
            Err(_) => report.malformed += 1,
        }
    }
    Ok((groups, report))
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn parse_detections(
    text: &str,
    path: &Path,
    opts: ReadOptions,
) -> Result<(Vec<FrameDetections>, ReadReport)> {
    let (groups, report) = parse_lines(text, path, opts, |f| {
        let (frame, bbox) = frame_and_box(f)?;
        let score = field_f64(f, 6)?;
        if !(0.0..=1.0).contains(&score) {
            return Err(format!("score {score} outside [0, 1]"));
        }
        Ok(match bbox {
            Some(bbox) => Row::Keep(frame, Detection { bbox, score, frame }),
            None => Row::NonPositive,
        })
    })?;
    let frames = groups
        .into_iter()
        .map(|(frame, detections)| FrameDetections { frame, detections })
        .collect();
    Ok((frames, report))
}

/// Reads a detection file into frame groups sorted by frame.
pub fn read_detections(
    path: &Path,
    opts: ReadOptions,
) -> Result<(Vec<FrameDetections>, ReadReport)> {
    parse_detections(&read_text(path)?, path, opts)
}

pub fn parse_ground_truth(
    text: &str,
    path: &Path,
    opts: ReadOptions,
) -> Result<(Vec<LabeledFrame>, ReadReport)> {
    let (groups, report) = parse_lines(text, path, opts, |f| {
        let (frame, bbox) = frame_and_box(f)?;
        let id = field_int(f, 1)?;
        if id < 0 {
            return Err(format!("negative ground-truth id {id}"));
        }
        let flag = optional_f64(f, 6, 1.0)?;
        let class = optional_f64(f, 7, 1.0)?;
        let visibility = optional_f64(f, 8, 1.0)?;
        if flag == 0.0 || (opts.pedestrians_only && class != 1.0) {
            return Ok(Row::Ignored);
        }
        Ok(match bbox {
            Some(bbox) => Row::Keep(
                frame,
                LabeledBox {
                    id: id as u64,
                    bbox,
                    confidence: visibility,
                },
            ),
            None => Row::NonPositive,
        })
    })?;
    Ok((labeled(groups), report))
}

/// Reads a `gt.txt`; rows with flag 0 are excluded.
pub fn read_ground_truth(path: &Path, opts: ReadOptions) -> Result<(Vec<LabeledFrame>, ReadReport)> {
    parse_ground_truth(&read_text(path)?, path, opts)
}

pub fn parse_results(
    text: &str,
    path: &Path,
    opts: ReadOptions,
) -> Result<(Vec<LabeledFrame>, ReadReport)> {
    let (groups, report) = parse_lines(text, path, opts, |f| {
        let (frame, bbox) = frame_and_box(f)?;
        let id = field_int(f, 1)?;
        if id < 0 {
            return Err(format!("negative track id {id}"));
        }
        let score = optional_f64(f, 6, 1.0)?;
        Ok(match bbox {
            Some(bbox) => Row::Keep(
                frame,
                LabeledBox {
                    id: id as u64,
                    bbox,
                    confidence: score,
                },
            ),
            None => Row::NonPositive,
        })
    })?;
    Ok((labeled(groups), report))
}

pub fn read_results(path: &Path, opts: ReadOptions) -> Result<(Vec<LabeledFrame>, ReadReport)> {
    parse_results(&read_text(path)?, path, opts)
}

fn labeled(groups: BTreeMap<u32, Vec<LabeledBox>>) -> Vec<LabeledFrame> {
    groups
        .into_iter()
        .map(|(frame, boxes)| LabeledFrame { frame, boxes })
        .collect()
}

/// Two-decimal fixed point without a negative zero.
fn fixed2(v: f64) -> String {
    let s = format!("{v:.2}");
    if s == "-0.00" {
        "0.00".to_string()
    } else {
        s
    }
}

fn push_tlwh(out: &mut String, b: &BBox) {
    let [x, y, w, h] = b.to_tlwh();
    let _ = write!(out, "{},{},{},{}", fixed2(x), fixed2(y), fixed2(w), fixed2(h));
}

/// Results text, ordered by `(frame, id)`.
pub fn format_results(results: &[FrameResult]) -> String {
    let mut rows: Vec<(u32, u64, &BBox, f64)> = results
        .iter()
        .flat_map(|r| r.records.iter().map(move |rec| (r.frame, rec.id.0, &rec.bbox, rec.score)))
        .collect();
    rows.sort_by_key(|&(f, id, _, _)| (f, id));
    let mut out = String::new();
    for (frame, id, bbox, score) in rows {
        let _ = write!(out, "{frame},{id},");
        push_tlwh(&mut out, bbox);
        let _ = writeln!(out, ",{},-1,-1,-1", fixed2(score));
    }
    out
}

pub fn write_results(path: &Path, results: &[FrameResult]) -> Result<()> {
    write_atomic(path, &format_results(results))
}

pub fn format_detections(frames: &[FrameDetections]) -> String {
    let mut out = String::new();
    for f in frames {
        for d in &f.detections {
            let _ = write!(out, "{},-1,", f.frame);
            push_tlwh(&mut out, &d.bbox);
            let _ = writeln!(out, ",{},-1,-1,-1", fixed2(d.score));
        }
    }
    out
}

/// Ground truth as `frame,id,x,y,w,h,1,1,visibility`, ordered by `(frame, id)`.
pub fn format_ground_truth(frames: &[LabeledFrame]) -> String {
    let mut out = String::new();
    for f in frames {
        let mut boxes: Vec<&LabeledBox> = f.boxes.iter().collect();
        boxes.sort_by_key(|b| b.id);
        for b in boxes {
            let _ = write!(out, "{},{},", f.frame, b.id);
            push_tlwh(&mut out, &b.bbox);
            let _ = writeln!(out, ",1,1,{}", fixed2(b.confidence));
        }
    }
    out
}

/// Writes through a sibling temporary file and a rename.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let mut tmp = PathBuf::from(path);
    let name = path
        .file_name()
        .map(|n| format!(".{}.tmp", n.to_string_lossy()))
        .unwrap_or_else(|| ".tmp".into());
    tmp.set_file_name(name);
    fs::write(&tmp, contents).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

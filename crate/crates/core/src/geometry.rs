//! Axis-aligned box arithmetic: IoU, normalized IoU and covered ratio.
//!
//! Boxes are stored in center form `(u, v, w, h)`. Conversion to and from
//! the top-left form used by MOTChallenge files happens at the I/O boundary.

use crate::error::{Error, Result};

/// Axis-aligned bounding box in center form, pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BBox {
    pub u: f64,
    pub v: f64,
    pub w: f64,
    pub h: f64,
}

impl BBox {
    /// Builds a box, rejecting non-finite values and non-positive sizes.
    pub fn new(u: f64, v: f64, w: f64, h: f64) -> Result<Self> {
        let finite = u.is_finite() && v.is_finite() && w.is_finite() && h.is_finite();
        if !finite || w <= 0.0 || h <= 0.0 {
            return Err(Error::InvalidBox { w, h });
        }
        Ok(BBox { u, v, w, h })
    }

    /// From top-left corner plus size.
    pub fn from_tlwh(x: f64, y: f64, w: f64, h: f64) -> Result<Self> {
        Self::new(x + w / 2.0, y + h / 2.0, w, h)
    }

    pub fn to_tlwh(&self) -> [f64; 4] {
        [self.u - self.w / 2.0, self.v - self.h / 2.0, self.w, self.h]
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }

    pub fn left(&self) -> f64 {
        self.u - self.w / 2.0
    }

    pub fn right(&self) -> f64 {
        self.u + self.w / 2.0
    }

    pub fn top(&self) -> f64 {
        self.v - self.h / 2.0
    }

    pub fn bottom(&self) -> f64 {
        self.v + self.h / 2.0
    }

    pub fn aspect(&self) -> f64 {
        self.w / self.h
    }

    /// Area measured from the edge coordinates, so that it agrees bit-for-bit
    /// with `intersection_area` of a box with itself.
    fn edge_area(&self) -> f64 {
        (self.right() - self.left()) * (self.bottom() - self.top())
    }

    pub fn translated(&self, du: f64, dv: f64) -> Self {
        BBox {
            u: self.u + du,
            v: self.v + dv,
            ..*self
        }
    }
}

pub fn intersection_area(a: &BBox, b: &BBox) -> f64 {
    let iw = a.right().min(b.right()) - a.left().max(b.left());
    let ih = a.bottom().min(b.bottom()) - a.top().max(b.top());
    if iw <= 0.0 || ih <= 0.0 {
        0.0
    } else {
        iw * ih
    }
}

pub fn iou(a: &BBox, b: &BBox) -> f64 {
    let inter = intersection_area(a, b);
    if inter == 0.0 {
        return 0.0;
    }
    let union = a.edge_area() + b.edge_area() - inter;
    (inter / union).clamp(0.0, 1.0)
}

/// Normalized IoU of a detection against a predicted track box.
///
/// IoU minus the mean of the four position/size differences, each normalized
/// by the detection's own width or height. Not symmetric: `det` must be the
/// detection. The result is unbounded below.
pub fn niou(det: &BBox, pred: &BBox) -> f64 {
    let du = (det.u - pred.u).abs() / det.w;
    let dv = (det.v - pred.v).abs() / det.h;
    let dw = (det.w - pred.w).abs() / det.w;
    let dh = (det.h - pred.h).abs() / det.h;
    iou(det, pred) - (du + dv + dw + dh) / 4.0
}

/// Largest fraction of `target`'s area covered by any single box in `others`.
///
/// The caller excludes `target` itself from `others`.
pub fn covered_ratio<'a, I>(target: &BBox, others: I) -> f64
where
    I: IntoIterator<Item = &'a BBox>,
{
    let area = target.edge_area();
    others
        .into_iter()
        .map(|o| intersection_area(target, o) / area)
        .fold(0.0, f64::max)
        .min(1.0)
}

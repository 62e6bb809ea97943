//! "Four plus one" frame partitioning and crop/frame coordinate mapping.
//!
//! Four tiles P1..P4 partition the frame (top band split left/right, bottom
//! band split left/right) and a fifth tile P5 sits centered on top of them to
//! catch objects near the tile seams and the road's vanishing area. P1/P2 are
//! mostly sky and get skipped by default.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Rect;
use crate::oracle::GtObject;
use crate::tensor::FeatureMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PartId {
    P1,
    P2,
    P3,
    P4,
    P5,
}

impl PartId {
    pub const ALL: [PartId; 5] = [PartId::P1, PartId::P2, PartId::P3, PartId::P4, PartId::P5];
    /// The parts processed by default (bottom tiles and center).
    pub const LOWER: [PartId; 3] = [PartId::P3, PartId::P4, PartId::P5];

    pub fn number(self) -> u8 {
        match self {
            PartId::P1 => 1,
            PartId::P2 => 2,
            PartId::P3 => 3,
            PartId::P4 => 4,
            PartId::P5 => 5,
        }
    }

    pub fn from_number(n: u8) -> Option<PartId> {
        match n {
            1 => Some(PartId::P1),
            2 => Some(PartId::P2),
            3 => Some(PartId::P3),
            4 => Some(PartId::P4),
            5 => Some(PartId::P5),
            _ => None,
        }
    }
}

impl std::fmt::Display for PartId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "P{}", self.number())
    }
}

/// Frame layout: P1..P4 tile the frame exactly; P5 is centered.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionLayout {
    pub frame_w: u32,
    pub frame_h: u32,
    pub top_fraction: f64,
    pub center_fraction: f64,
    parts: [Rect; 5],
}

/// Build a layout. `top_fraction` is the height share of the top band
/// (P1 ∪ P2) in (0, 1); `center_fraction` is P5's width/height share in
/// (0, 1], centered on the frame.
pub fn make_layout(
    frame_w: u32,
    frame_h: u32,
    top_fraction: f64,
    center_fraction: f64,
) -> Result<PartitionLayout> {
    if !(top_fraction > 0.0 && top_fraction < 1.0) {
        return Err(Error::Parameter(format!(
            "top_fraction {top_fraction} outside (0, 1)"
        )));
    }
    if !(center_fraction > 0.0 && center_fraction <= 1.0) {
        return Err(Error::Parameter(format!(
            "center_fraction {center_fraction} outside (0, 1]"
        )));
    }
    if frame_w == 0 || frame_h == 0 {
        return Err(Error::Parameter("frame dimensions must be positive".into()));
    }
    let top_h = (frame_h as f64 * top_fraction).round() as u32;
    if top_h == 0 || top_h >= frame_h {
        return Err(Error::Parameter(format!(
            "top band height {top_h} leaves a degenerate part"
        )));
    }
    let left_w = frame_w / 2;
    let right_w = frame_w - left_w;
    if left_w == 0 || right_w == 0 {
        return Err(Error::Parameter("frame too narrow to split".into()));
    }
    let c_w = (frame_w as f64 * center_fraction).round() as u32;
    let c_h = (frame_h as f64 * center_fraction).round() as u32;
    if c_w == 0 || c_h == 0 {
        return Err(Error::Parameter("center part is degenerate".into()));
    }
    let c_x = (frame_w - c_w) / 2;
    let c_y = (frame_h - c_h) / 2;

    let parts = [
        Rect::new(0, 0, left_w, top_h),
        Rect::new(left_w, 0, right_w, top_h),
        Rect::new(0, top_h, left_w, frame_h - top_h),
        Rect::new(left_w, top_h, right_w, frame_h - top_h),
        Rect::new(c_x, c_y, c_w, c_h),
    ];
    Ok(PartitionLayout {
        frame_w,
        frame_h,
        top_fraction,
        center_fraction,
        parts,
    })
}

impl PartitionLayout {
    pub fn part_rect(&self, part: PartId) -> Rect {
        self.parts[part.number() as usize - 1]
    }

    pub fn frame_rect(&self) -> Rect {
        Rect::new(0, 0, self.frame_w, self.frame_h)
    }

    /// Top band P1 ∪ P2 as one rectangle.
    pub fn top_band(&self) -> Rect {
        Rect::new(0, 0, self.frame_w, self.parts[0].h)
    }

    /// Crop references for the given parts against a feature grid.
    pub fn crop_refs(&self, parts: &[PartId], stride: u32) -> Result<Vec<CropRef>> {
        parts
            .iter()
            .map(|&p| CropRef::from_frame_rect(p, self.part_rect(p), stride, self))
            .collect()
    }
}

/// One crop: its frame-pixel rectangle and the feature-cell rectangle that
/// covers it (pixel rect / stride, rounded outward).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CropRef {
    pub part: PartId,
    pub frame_rect: Rect,
    pub feature_rect: Rect,
}

impl CropRef {
    pub fn from_frame_rect(
        part: PartId,
        frame_rect: Rect,
        stride: u32,
        layout: &PartitionLayout,
    ) -> Result<CropRef> {
        if stride == 0 {
            return Err(Error::Parameter("stride must be >= 1".into()));
        }
        if !layout.frame_rect().contains_rect(&frame_rect) || frame_rect.is_empty() {
            return Err(Error::Range(format!(
                "part rectangle {frame_rect:?} outside frame"
            )));
        }
        let feat_w = layout.frame_w.div_ceil(stride);
        let feat_h = layout.frame_h.div_ceil(stride);
        let x0 = frame_rect.x / stride;
        let y0 = frame_rect.y / stride;
        let x1 = frame_rect.right().div_ceil(stride).min(feat_w);
        let y1 = frame_rect.bottom().div_ceil(stride).min(feat_h);
        Ok(CropRef {
            part,
            frame_rect,
            feature_rect: Rect::new(x0, y0, x1 - x0, y1 - y0),
        })
    }
}

/// Copy the sub-tensor addressed by a crop; the stride is preserved.
pub fn crop_feature(f: &FeatureMap, c: &CropRef) -> Result<FeatureMap> {
    let r = c.feature_rect;
    let t = f.tensor.crop(r.x as usize, r.y as usize, r.w as usize, r.h as usize)?;
    FeatureMap::new(t, f.stride)
}

/// Map a box expressed in a crop's local feature cells back to frame pixels:
/// scale by the stride, translate by the crop's cell origin, clamp to the
/// frame.
pub fn map_box_to_frame(cell_box: Rect, crop: &CropRef, stride: u32, frame: Rect) -> Rect {
    let x0 = (crop.feature_rect.x + cell_box.x) * stride;
    let y0 = (crop.feature_rect.y + cell_box.y) * stride;
    let x1 = (x0 + cell_box.w * stride).min(frame.right());
    let y1 = (y0 + cell_box.h * stride).min(frame.bottom());
    let x0 = x0.min(frame.right());
    let y0 = y0.min(frame.bottom());
    Rect::new(x0, y0, x1.saturating_sub(x0), y1.saturating_sub(y0))
}

/// Fraction of frames with at least one object whose center lies in the
/// top band and in the center/top overlap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OccupancyStats {
    pub frames: usize,
    /// P(some object center in P1 ∪ P2).
    pub p_top: f64,
    /// P(some object center in P5 ∩ (P1 ∪ P2)).
    pub p_top_center: f64,
    /// Set when the ground truth holds no objects at all.
    pub empty: bool,
}

pub fn occupancy_stats(frames: &[Vec<GtObject>], layout: &PartitionLayout) -> OccupancyStats {
    let top = layout.top_band();
    let p5 = layout.part_rect(PartId::P5);
    let overlap = p5.intersection(&top);
    let mut top_frames = 0usize;
    let mut overlap_frames = 0usize;
    let mut any_objects = false;
    for frame in frames {
        if !frame.is_empty() {
            any_objects = true;
        }
        let mut in_top = false;
        let mut in_overlap = false;
        for obj in frame {
            let (cx, cy) = obj.rect.center();
            if top.contains_point(cx, cy) {
                in_top = true;
                if overlap.map_or(false, |r| r.contains_point(cx, cy)) {
                    in_overlap = true;
                }
            }
        }
        top_frames += in_top as usize;
        overlap_frames += in_overlap as usize;
    }
    let n = frames.len();
    if n == 0 || !any_objects {
        return OccupancyStats {
            frames: n,
            p_top: 0.0,
            p_top_center: 0.0,
            empty: true,
        };
    }
    OccupancyStats {
        frames: n,
        p_top: top_frames as f64 / n as f64,
        p_top_center: overlap_frames as f64 / n as f64,
        empty: false,
    }
}

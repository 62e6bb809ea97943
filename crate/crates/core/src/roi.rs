//! RoI box extraction from normalized activation maps.
//!
//! Thresholding yields a binary heat mask per crop; 8-connected components
//! are labeled with a two-pass union-find scan; each component becomes a
//! frame-space box (tight cell bound, scaled, padded, clamped to its part).
//! Overlapping boxes are merged to a fixpoint and a validity policy keeps the
//! boxes worth offloading.

use serde::{Deserialize, Serialize};

use crate::cam::ActivationMap;
use crate::error::{Error, Result};
use crate::geometry::Rect;
use crate::partition::{map_box_to_frame, CropRef, PartId};

/// Binary mask over one crop's activation cells.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HeatMask {
    pub width: usize,
    pub height: usize,
    pub bits: Vec<bool>,
    pub part: PartId,
    pub threshold: f32,
}

impl HeatMask {
    #[inline]
    pub fn get(&self, y: usize, x: usize) -> bool {
        self.bits[y * self.width + x]
    }

    pub fn set_cells(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }
}

/// Candidate offload region in frame pixels.
#[derive(Debug, Clone, PartialEq)]
pub struct RoiBox {
    pub rect: Rect,
    pub part: PartId,
    /// Sum of normalized activation over the component's cells.
    pub heat_mass: f64,
    /// heat_mass / number of component cells; stays in [0, 1].
    pub mean_heat: f64,
    /// Component cell count behind the heat statistics.
    pub heat_cells: u64,
    /// Down-sampling rate assigned by the offload policy.
    pub rate: Option<f64>,
    pub valid: bool,
}

impl RoiBox {
    pub fn area_px(&self) -> u64 {
        self.rect.area()
    }
}

/// Keep cells with activation at or above `sigma` (on a normalized map).
pub fn threshold_mask(m: &ActivationMap, sigma: f64) -> Result<HeatMask> {
    if !(sigma > 0.0 && sigma < 1.0) {
        return Err(Error::Parameter(format!(
            "heat threshold {sigma} outside (0, 1)"
        )));
    }
    let sigma = sigma as f32;
    Ok(HeatMask {
        width: m.width,
        height: m.height,
        bits: m.values.iter().map(|&v| v >= sigma).collect(),
        part: m.part,
        threshold: sigma,
    })
}

/// One 8-connected component; cells are (x, y) in crop-local coordinates,
/// sorted row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Component {
    pub cells: Vec<(u32, u32)>,
}

impl Component {
    /// Tight bounding box in cell coordinates.
    pub fn cell_bbox(&self) -> Rect {
        let mut x0 = u32::MAX;
        let mut y0 = u32::MAX;
        let mut x1 = 0u32;
        let mut y1 = 0u32;
        for &(x, y) in &self.cells {
            x0 = x0.min(x);
            y0 = y0.min(y);
            x1 = x1.max(x);
            y1 = y1.max(y);
        }
        Rect::new(x0, y0, x1 - x0 + 1, y1 - y0 + 1)
    }
}

struct UnionFind {
    parent: Vec<u32>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n as u32).collect(),
        }
    }

    fn find(&mut self, i: u32) -> u32 {
        let mut root = i;
        while self.parent[root as usize] != root {
            root = self.parent[root as usize];
        }
        // Path compression.
        let mut cur = i;
        while self.parent[cur as usize] != root {
            let next = self.parent[cur as usize];
            self.parent[cur as usize] = root;
            cur = next;
        }
        root
    }

    fn union(&mut self, a: u32, b: u32) {
        let ra = self.find(a);
        let rb = self.find(b);
        if ra != rb {
            // Smaller root wins, keeping labels stable in scan order.
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi as usize] = lo;
        }
    }
}

/// Two-pass union-find labeling with 8-connectivity. Components come out
/// ordered by their first cell in row-major scan order; cells within a
/// component are row-major sorted.
pub fn connected_components(mask: &HeatMask) -> Vec<Component> {
    let w = mask.width;
    let h = mask.height;
    if w == 0 || h == 0 {
        return Vec::new();
    }
    // First pass: provisional labels, unions with W / NW / N / NE neighbors.
    let mut labels = vec![u32::MAX; w * h];
    let mut uf = UnionFind::new(w * h);
    for y in 0..h {
        for x in 0..w {
            if !mask.get(y, x) {
                continue;
            }
            let idx = (y * w + x) as u32;
            labels[idx as usize] = idx;
            if x > 0 && mask.get(y, x - 1) {
                uf.union(idx, idx - 1);
            }
            if y > 0 {
                if mask.get(y - 1, x) {
                    uf.union(idx, idx - w as u32);
                }
                if x > 0 && mask.get(y - 1, x - 1) {
                    uf.union(idx, idx - w as u32 - 1);
                }
                if x + 1 < w && mask.get(y - 1, x + 1) {
                    uf.union(idx, idx - w as u32 + 1);
                }
            }
        }
    }
    // Second pass: resolve roots and bucket cells in scan order.
    let mut order: Vec<u32> = Vec::new();
    let mut slot_of_root: std::collections::HashMap<u32, usize> = std::collections::HashMap::new();
    let mut components: Vec<Component> = Vec::new();
    for y in 0..h {
        for x in 0..w {
            let idx = y * w + x;
            if labels[idx] == u32::MAX {
                continue;
            }
            let root = uf.find(idx as u32);
            let slot = *slot_of_root.entry(root).or_insert_with(|| {
                order.push(root);
                components.push(Component { cells: Vec::new() });
                components.len() - 1
            });
            components[slot].cells.push((x as u32, y as u32));
        }
    }
    components
}

/// Turn components into frame-space boxes: tight cell bound, mapped through
/// the crop at the given stride, dilated by `pad` pixels, clamped to the
/// part's rectangle. Heat statistics come from the activation map.
pub fn boxes_from_components(
    components: &[Component],
    map: &ActivationMap,
    crop: &CropRef,
    stride: u32,
    pad: u32,
    frame: Rect,
) -> Vec<RoiBox> {
    components
        .iter()
        .map(|comp| {
            let cell_bbox = comp.cell_bbox();
            let pixel_box = map_box_to_frame(cell_bbox, crop, stride, frame);
            let rect = pixel_box.padded_clamped(pad, &crop.frame_rect);
            let mut mass = 0.0f64;
            for &(x, y) in &comp.cells {
                mass += map.get(y as usize, x as usize) as f64;
            }
            let cells = comp.cells.len() as u64;
            RoiBox {
                rect,
                part: crop.part,
                heat_mass: mass,
                mean_heat: mass / cells as f64,
                heat_cells: cells,
                rate: None,
                valid: false,
            }
        })
        .collect()
}

/// Intersection-over-union of two boxes.
fn box_iou(a: &Rect, b: &Rect) -> f64 {
    let inter = a.intersection_area(b);
    if inter == 0 {
        return 0.0;
    }
    let union = a.area() + b.area() - inter;
    inter as f64 / union as f64
}

/// Merge boxes whose pairwise IoU reaches the threshold into their bounding
/// union, iterated to a fixpoint. Heat mass and cell counts add.
pub fn merge_overlapping(boxes: Vec<RoiBox>, iou_threshold: f64) -> Vec<RoiBox> {
    let mut boxes = boxes;
    loop {
        let mut merged_any = false;
        'scan: for i in 0..boxes.len() {
            for j in i + 1..boxes.len() {
                if box_iou(&boxes[i].rect, &boxes[j].rect) >= iou_threshold {
                    let b = boxes.remove(j);
                    let a = &mut boxes[i];
                    a.rect = a.rect.bounding_union(&b.rect);
                    a.heat_mass += b.heat_mass;
                    a.heat_cells += b.heat_cells;
                    a.mean_heat = a.heat_mass / a.heat_cells as f64;
                    merged_any = true;
                    break 'scan;
                }
            }
        }
        if !merged_any {
            return boxes;
        }
    }
}

/// Criteria for keeping an extracted box.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ValidityPolicy {
    /// Minimum box area in frame pixels.
    pub min_area_px: u64,
    /// Minimum mean normalized heat.
    pub sigma_v: f64,
    /// Keep at most this many boxes, highest heat mass first; `None`
    /// disables the cap (pure filtering, input order preserved).
    pub max_boxes: Option<usize>,
}

impl Default for ValidityPolicy {
    fn default() -> Self {
        ValidityPolicy {
            min_area_px: 32 * 32,
            sigma_v: 0.55,
            max_boxes: Some(6),
        }
    }
}

/// Filter boxes by area and mean heat; with a cap, order by heat mass
/// descending (stable) and truncate. Kept boxes are flagged valid.
pub fn select_valid(boxes: Vec<RoiBox>, policy: &ValidityPolicy) -> Vec<RoiBox> {
    let mut kept: Vec<RoiBox> = boxes
        .into_iter()
        .filter(|b| b.area_px() >= policy.min_area_px && b.mean_heat >= policy.sigma_v)
        .collect();
    if let Some(cap) = policy.max_boxes {
        kept.sort_by(|a, b| b.heat_mass.partial_cmp(&a.heat_mass).unwrap());
        kept.truncate(cap);
    }
    for b in &mut kept {
        b.valid = true;
    }
    kept
}

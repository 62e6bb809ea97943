//! Axis-aligned rectangles in pixel or feature-cell coordinates.

use serde::{Deserialize, Serialize};

/// Axis-aligned rectangle. `x`/`y` is the top-left corner; the covered
/// half-open span is `[x, x+w) × [y, y+h)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Rect {
    pub x: u32,
    pub y: u32,
    pub w: u32,
    pub h: u32,
}

impl Rect {
    pub const fn new(x: u32, y: u32, w: u32, h: u32) -> Self {
        Rect { x, y, w, h }
    }

    pub fn area(&self) -> u64 {
        self.w as u64 * self.h as u64
    }

    pub fn right(&self) -> u32 {
        self.x + self.w
    }

    pub fn bottom(&self) -> u32 {
        self.y + self.h
    }

    pub fn is_empty(&self) -> bool {
        self.w == 0 || self.h == 0
    }

    /// Whether a (possibly fractional) point lies inside the half-open span.
    pub fn contains_point(&self, px: f64, py: f64) -> bool {
        px >= self.x as f64
            && px < self.right() as f64
            && py >= self.y as f64
            && py < self.bottom() as f64
    }

    /// Whether `other` lies entirely within `self`.
    pub fn contains_rect(&self, other: &Rect) -> bool {
        other.x >= self.x
            && other.y >= self.y
            && other.right() <= self.right()
            && other.bottom() <= self.bottom()
    }

    pub fn intersection(&self, other: &Rect) -> Option<Rect> {
        let x0 = self.x.max(other.x);
        let y0 = self.y.max(other.y);
        let x1 = self.right().min(other.right());
        let y1 = self.bottom().min(other.bottom());
        if x1 > x0 && y1 > y0 {
            Some(Rect::new(x0, y0, x1 - x0, y1 - y0))
        } else {
            None
        }
    }

    pub fn intersection_area(&self, other: &Rect) -> u64 {
        self.intersection(other).map_or(0, |r| r.area())
    }

    /// Smallest rectangle covering both operands.
    pub fn bounding_union(&self, other: &Rect) -> Rect {
        let x0 = self.x.min(other.x);
        let y0 = self.y.min(other.y);
        let x1 = self.right().max(other.right());
        let y1 = self.bottom().max(other.bottom());
        Rect::new(x0, y0, x1 - x0, y1 - y0)
    }

    /// Grow by `pad` on every side, then clamp to `bounds`.
    pub fn padded_clamped(&self, pad: u32, bounds: &Rect) -> Rect {
        let x0 = self.x.saturating_sub(pad).max(bounds.x);
        let y0 = self.y.saturating_sub(pad).max(bounds.y);
        let x1 = (self.right() + pad).min(bounds.right());
        let y1 = (self.bottom() + pad).min(bounds.bottom());
        Rect::new(x0, y0, x1.saturating_sub(x0), y1.saturating_sub(y0))
    }

    pub fn center(&self) -> (f64, f64) {
        (
            self.x as f64 + self.w as f64 / 2.0,
            self.y as f64 + self.h as f64 / 2.0,
        )
    }
}

/// Exact area of the union of a set of rectangles, by coordinate
/// compression. Intended for small sets (a handful of boxes per frame).
pub fn union_area(rects: &[Rect]) -> u64 {
    let rects: Vec<&Rect> = rects.iter().filter(|r| !r.is_empty()).collect();
    if rects.is_empty() {
        return 0;
    }
    let mut xs: Vec<u32> = Vec::with_capacity(rects.len() * 2);
    let mut ys: Vec<u32> = Vec::with_capacity(rects.len() * 2);
    for r in &rects {
        xs.push(r.x);
        xs.push(r.right());
        ys.push(r.y);
        ys.push(r.bottom());
    }
    xs.sort_unstable();
    xs.dedup();
    ys.sort_unstable();
    ys.dedup();

    let mut total = 0u64;
    for xi in 0..xs.len() - 1 {
        for yi in 0..ys.len() - 1 {
            let cx = xs[xi];
            let cy = ys[yi];
            if rects
                .iter()
                .any(|r| cx >= r.x && cx < r.right() && cy >= r.y && cy < r.bottom())
            {
                total += (xs[xi + 1] - cx) as u64 * (ys[yi + 1] - cy) as u64;
            }
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn intersection_and_union() {
        let a = Rect::new(0, 0, 4, 4);
        let b = Rect::new(2, 2, 4, 4);
        assert_eq!(a.intersection(&b), Some(Rect::new(2, 2, 2, 2)));
        assert_eq!(a.intersection_area(&b), 4);
        assert_eq!(a.bounding_union(&b), Rect::new(0, 0, 6, 6));

        let c = Rect::new(10, 10, 2, 2);
        assert_eq!(a.intersection(&c), None);
        assert_eq!(a.intersection_area(&c), 0);
    }

    #[test]
    fn pad_clamps_to_bounds() {
        let bounds = Rect::new(0, 0, 100, 100);
        let r = Rect::new(2, 2, 10, 10).padded_clamped(8, &bounds);
        assert_eq!(r, Rect::new(0, 0, 20, 20));
        let r = Rect::new(90, 90, 10, 10).padded_clamped(8, &bounds);
        assert_eq!(r, Rect::new(82, 82, 18, 18));
    }

    #[test]
    fn union_area_handles_overlap() {
        let rects = [Rect::new(0, 0, 4, 4), Rect::new(2, 2, 4, 4)];
        assert_eq!(union_area(&rects), 16 + 16 - 4);
        assert_eq!(union_area(&[]), 0);
        // Duplicates count once.
        let dup = [Rect::new(1, 1, 3, 3), Rect::new(1, 1, 3, 3)];
        assert_eq!(union_area(&dup), 9);
    }
}

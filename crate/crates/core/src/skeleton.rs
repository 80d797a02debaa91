//! Planar skeletons: chains of rectangles joined by horizontal segments.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::region::Region;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub u_min: f64,
    pub u_max: f64,
    pub v_min: f64,
    pub v_max: f64,
}

impl Rect {
    pub fn new(u_min: f64, u_max: f64, v_min: f64, v_max: f64) -> Result<Self> {
        if !(u_min < u_max && v_min < v_max) {
            return Err(Error::input(format!(
                "degenerate rectangle [{u_min}, {u_max}] × [{v_min}, {v_max}]"
            )));
        }
        Ok(Self { u_min, u_max, v_min, v_max })
    }

    pub fn width(&self) -> f64 {
        self.u_max - self.u_min
    }

    pub fn height(&self) -> f64 {
        self.v_max - self.v_min
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn distance(&self, p: &[f64]) -> f64 {
        let du = (self.u_min - p[0]).max(p[0] - self.u_max).max(0.0);
        let dv = (self.v_min - p[1]).max(p[1] - self.v_max).max(0.0);
        du.hypot(dv)
    }

    pub fn translated(&self, du: f64) -> Self {
        Self {
            u_min: self.u_min + du,
            u_max: self.u_max + du,
            ..*self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub start: [f64; 2],
    pub end: [f64; 2],
}

impl Segment {
    pub fn new(start: [f64; 2], end: [f64; 2]) -> Result<Self> {
        let s = Self { start, end };
        if !(s.length() > 0.0) {
            return Err(Error::input("segment must have positive length"));
        }
        Ok(s)
    }

    pub fn length(&self) -> f64 {
        (self.end[0] - self.start[0]).hypot(self.end[1] - self.start[1])
    }

    pub fn distance(&self, p: &[f64]) -> f64 {
        let (dx, dy) = (self.end[0] - self.start[0], self.end[1] - self.start[1]);
        let t = (((p[0] - self.start[0]) * dx + (p[1] - self.start[1]) * dy) / (dx * dx + dy * dy)).clamp(0.0, 1.0);
        (p[0] - self.start[0] - t * dx).hypot(p[1] - self.start[1] - t * dy)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Component {
    Rect(Rect),
    Segment(Segment),
}

impl Component {
    pub fn distance(&self, p: &[f64]) -> f64 {
        match self {
            Component::Rect(r) => r.distance(p),
            Component::Segment(s) => s.distance(p),
        }
    }
}

/// Alternating chain `Rect, Segment, Rect, …` along the `u` axis, with every
/// rectangle standing on `v = 0` and every segment lying on `v = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanarSkeleton {
    pub components: Vec<Component>,
}

impl PlanarSkeleton {
    pub fn new(components: Vec<Component>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::input("empty skeleton"));
        }
        let mut prev_end: Option<f64> = None;
        for (k, c) in components.iter().enumerate() {
            let (start, end) = match (k % 2, c) {
                (0, Component::Rect(r)) => {
                    if r.v_min != 0.0 {
                        return Err(Error::input("skeleton rectangles must stand on v = 0"));
                    }
                    (r.u_min, r.u_max)
                }
                (1, Component::Segment(s)) => {
                    if s.start[1] != 0.0 || s.end[1] != 0.0 || s.end[0] <= s.start[0] {
                        return Err(Error::input("skeleton segments must run rightwards along v = 0"));
                    }
                    (s.start[0], s.end[0])
                }
                _ => return Err(Error::input("skeleton must alternate rect, segment, rect, ...")),
            };
            if let Some(e) = prev_end {
                if (start - e).abs() > 1e-12 * (1.0 + e.abs()) {
                    return Err(Error::input(format!("component {k} does not meet its predecessor")));
                }
            }
            prev_end = Some(end);
        }
        if components.len().is_multiple_of(2) {
            return Err(Error::input("skeleton must end with a rectangle"));
        }
        Ok(Self { components })
    }

    pub fn rects(&self) -> impl Iterator<Item = &Rect> {
        self.components.iter().filter_map(|c| match c {
            Component::Rect(r) => Some(r),
            _ => None,
        })
    }

    pub fn segments(&self) -> impl Iterator<Item = &Segment> {
        self.components.iter().filter_map(|c| match c {
            Component::Segment(s) => Some(s),
            _ => None,
        })
    }

    pub fn total_rect_area(&self) -> f64 {
        self.rects().map(Rect::area).sum()
    }

    pub fn shortest_segment(&self) -> Option<f64> {
        self.segments().map(Segment::length).reduce(f64::min)
    }

    /// Default neighbourhood margin: `1e−2 ×` shortest segment (or the
    /// narrowest rectangle side for a lone rectangle).
    pub fn default_margin(&self) -> f64 {
        let base = self.shortest_segment().unwrap_or_else(|| {
            self.rects()
                .map(|r| r.width().min(r.height()))
                .fold(f64::INFINITY, f64::min)
        });
        1e-2 * base
    }

    pub fn distance(&self, p: &[f64]) -> f64 {
        self.components
            .iter()
            .map(|c| c.distance(p))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn bounds(&self) -> ([f64; 2], [f64; 2]) {
        let mut lo = [f64::INFINITY, 0.0];
        let mut hi = [f64::NEG_INFINITY, 0.0];
        for r in self.rects() {
            lo[0] = lo[0].min(r.u_min);
            hi[0] = hi[0].max(r.u_max);
            hi[1] = hi[1].max(r.v_max);
        }
        (lo, hi)
    }

    pub fn neighborhood(&self, margin: f64) -> SkeletonNeighborhood {
        SkeletonNeighborhood {
            skeleton: self.clone(),
            margin,
        }
    }
}

/// Points within Euclidean distance `margin` of the skeleton.
#[derive(Debug, Clone, PartialEq)]
pub struct SkeletonNeighborhood {
    pub skeleton: PlanarSkeleton,
    pub margin: f64,
}

impl Region for SkeletonNeighborhood {
    fn dim(&self) -> usize {
        2
    }

    fn contains(&self, p: &[f64]) -> bool {
        self.skeleton.distance(p) <= self.margin
    }

    fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
        let (lo, hi) = self.skeleton.bounds();
        (
            vec![lo[0] - self.margin, lo[1] - self.margin],
            vec![hi[0] + self.margin, hi[1] + self.margin],
        )
    }
}

/// Left edges `a_i = (i−1)(1 + 1/N)` and right edges `b_i = a_i + 1/N`.
pub fn yn_abscissae(n: usize) -> (Vec<f64>, Vec<f64>) {
    let nf = n as f64;
    let a: Vec<f64> = (0..n).map(|i| i as f64 * (1.0 + 1.0 / nf)).collect();
    let b = a.iter().map(|x| x + 1.0 / nf).collect();
    (a, b)
}

/// `Y_N(κ)`: rectangles `[a_i, b_i] × [0, κ]` joined by unit segments.
pub fn build_yn(n: usize, kappa: f64) -> Result<PlanarSkeleton> {
    if n == 0 {
        return Err(Error::input("N must be at least 1"));
    }
    if !(kappa > 0.0) {
        return Err(Error::input(format!("kappa must be positive, got {kappa}")));
    }
    let (a, b) = yn_abscissae(n);
    let mut components = Vec::with_capacity(2 * n - 1);
    for i in 0..n {
        components.push(Component::Rect(Rect::new(a[i], b[i], 0.0, kappa)?));
        if i + 1 < n {
            components.push(Component::Segment(Segment::new([b[i], 0.0], [a[i + 1], 0.0])?));
        }
    }
    PlanarSkeleton::new(components)
}

/// Smallest rectangle area accepted by [`build_z_profile`].
pub const DEFAULT_MIN_AREA: f64 = 1e-6;

/// `Y = P₁ ∪ L ∪ P₂` with unit-height rectangles of areas `C − c` and `c`
/// joined by a unit segment.
pub fn build_z_profile(big: f64, small: f64, min_area: f64) -> Result<PlanarSkeleton> {
    if !(small > 0.0 && small < big) {
        return Err(Error::input(format!("need 0 < c < C, got C = {big}, c = {small}")));
    }
    let first = big - small;
    if first < min_area || small < min_area {
        return Err(Error::input(format!(
            "rectangle area below the geometric floor {min_area}: ({first}, {small})"
        )));
    }
    let p1 = Rect::new(0.0, first, 0.0, 1.0)?;
    let l = Segment::new([first, 0.0], [first + 1.0, 0.0])?;
    let p2 = Rect::new(first + 1.0, first + 1.0 + small, 0.0, 1.0)?;
    PlanarSkeleton::new(vec![Component::Rect(p1), Component::Segment(l), Component::Rect(p2)])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn y2_abscissae() {
        let y = build_yn(2, 1.0).unwrap();
        let rects: Vec<_> = y.rects().copied().collect();
        assert_eq!(rects[0].u_min, 0.0);
        assert_eq!(rects[0].u_max, 0.5);
        assert_eq!(rects[1].u_min, 1.5);
        assert_eq!(rects[1].u_max, 2.0);
        assert!(rects.iter().all(|r| (r.area() - 0.5).abs() < 1e-15));
        let segs: Vec<_> = y.segments().copied().collect();
        assert_eq!(segs.len(), 1);
        assert_eq!(segs[0].start, [0.5, 0.0]);
        assert_eq!(segs[0].end, [1.5, 0.0]);
    }

    #[test]
    fn y1_is_single_rectangle() {
        let y = build_yn(1, 1.0).unwrap();
        assert_eq!(y.components.len(), 1);
        assert_eq!(y.total_rect_area(), 1.0);
    }

    #[test]
    fn y4_kappa2() {
        let y = build_yn(4, 2.0).unwrap();
        let rects: Vec<_> = y.rects().copied().collect();
        assert_eq!(rects.len(), 4);
        assert!(rects.iter().all(|r| (r.area() - 0.5).abs() < 1e-15));
        // b₃ − a₃ = 1/4 by the formulas: a₃ = 2·(5/4) = 2.5, b₃ = 2.75.
        assert_eq!(rects[2].u_min, 2.5);
        assert_eq!(rects[2].u_max - rects[2].u_min, 0.25);
    }

    #[test]
    fn z_profile_areas() {
        let y = build_z_profile(2.0, 1.0, DEFAULT_MIN_AREA).unwrap();
        let areas: Vec<f64> = y.rects().map(Rect::area).collect();
        assert_eq!(areas, vec![1.0, 1.0]);
        let w = build_z_profile(1.0, 0.5, DEFAULT_MIN_AREA).unwrap();
        let areas: Vec<f64> = w.rects().map(Rect::area).collect();
        assert_eq!(areas, vec![0.5, 0.5]);
        assert!(build_z_profile(1.0, 1.0, DEFAULT_MIN_AREA).is_err());
        assert!(build_z_profile(1.0, 1e-9, DEFAULT_MIN_AREA).is_err());
    }

    #[test]
    fn neighborhood_membership() {
        let y = build_yn(2, 1.0).unwrap();
        let nb = y.neighborhood(0.01);
        assert!(nb.contains(&[1.0, 0.005]));
        assert!(!nb.contains(&[1.0, 0.02]));
        assert!(nb.contains(&[0.25, 0.9]));
    }

    #[test]
    fn rejects_malformed_chain() {
        let r = Rect::new(0.0, 1.0, 0.0, 1.0).unwrap();
        let s = Segment::new([2.0, 0.0], [3.0, 0.0]).unwrap();
        assert!(PlanarSkeleton::new(vec![Component::Rect(r), Component::Segment(s), Component::Rect(r.translated(3.0))]).is_err());
    }
}

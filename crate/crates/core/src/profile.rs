//! Area-preserving embeddings of discs into thin neighbourhoods of planar
//! skeletons.
//!
//! The disc is unrolled in symplectic polar coordinates `a = π(x²+y²)`,
//! `φ = (arg + π)/2π`, and the pair `(a, φ)` is laid out along the spine of
//! the skeleton: `u = U(a)` with `U` inverse to the cumulative area `W` of
//! the profile, and `v = −m/2 + φ·w(u)` with `w` the profile height.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::map::SmoothMap;
use crate::region::{BallRegion, SharedRegion};
use crate::skeleton::{PlanarSkeleton, SkeletonNeighborhood};
use crate::smooth::BumpFunction;

/// Relative default for the domain shrinking `δ_shrink = 1e−3·C`.
pub const DEFAULT_SHRINK_FRACTION: f64 = 1e-3;

/// Height profile over the spine: a baseline of height `m` sitting at
/// `v = −m/2`, plus one smooth plateau per rectangle.
#[derive(Debug, Clone, PartialEq)]
pub struct SpineProfile {
    pub margin: f64,
    pub u_start: f64,
    pub u_end: f64,
    pub bumps: Vec<BumpFunction>,
}

impl SpineProfile {
    pub fn for_skeleton(skel: &PlanarSkeleton, margin: f64) -> Result<Self> {
        if !(margin > 0.0) {
            return Err(Error::input(format!("margin must be positive, got {margin}")));
        }
        let half = 0.5 * margin;
        let bumps: Vec<BumpFunction> = skel
            .rects()
            .map(|r| BumpFunction::new(r.height(), r.u_min, r.u_max, half))
            .collect();
        let (lo, hi) = skel.bounds();
        Ok(Self {
            margin,
            u_start: lo[0] - half,
            u_end: hi[0] + half,
            bumps,
        })
    }

    pub fn bottom(&self) -> f64 {
        -0.5 * self.margin
    }

    pub fn width(&self, u: f64) -> f64 {
        self.margin + self.bumps.iter().map(|b| b.value(u)).sum::<f64>()
    }

    pub fn width_deriv(&self, u: f64) -> f64 {
        self.bumps.iter().map(|b| b.deriv(u)).sum()
    }

    /// Area of the profile over `[u_start, u]`.
    pub fn cumulative(&self, u: f64) -> f64 {
        self.margin * (u - self.u_start) + self.bumps.iter().map(|b| b.integral(u) - b.integral(self.u_start)).sum::<f64>()
    }

    pub fn total_area(&self) -> f64 {
        self.cumulative(self.u_end)
    }

    /// Inverse of [`cumulative`](Self::cumulative) on `[0, total_area]`.
    pub fn inverse_cumulative(&self, a: f64) -> f64 {
        let (mut lo, mut hi) = (self.u_start, self.u_end);
        let mut u = self.u_start + a / self.margin.max(1e-300);
        u = u.clamp(lo, hi);
        for _ in 0..200 {
            let f = self.cumulative(u) - a;
            if f > 0.0 {
                hi = u;
            } else {
                lo = u;
            }
            let next = u - f / self.width(u);
            let next = if next > lo && next < hi { next } else { 0.5 * (lo + hi) };
            if (next - u).abs() <= 1e-15 * (1.0 + u.abs()) {
                return next;
            }
            u = next;
        }
        u
    }
}

/// `g: B²(C − δ_shrink) → N(skeleton)`, area preserving.
#[derive(Clone)]
pub struct DiscToSkeleton {
    pub capacity: f64,
    pub shrink: f64,
    pub skeleton: PlanarSkeleton,
    pub profile: SpineProfile,
    domain: Arc<BallRegion>,
}

impl DiscToSkeleton {
    pub fn new(capacity: f64, skel: &PlanarSkeleton, margin: f64, shrink: f64) -> Result<Self> {
        if !(capacity > 0.0) {
            return Err(Error::input(format!("capacity must be positive, got {capacity}")));
        }
        if !(shrink >= 0.0 && shrink < capacity) {
            return Err(Error::input(format!("shrink {shrink} outside [0, {capacity})")));
        }
        let profile = SpineProfile::for_skeleton(skel, margin)?;
        let effective = capacity - shrink;
        if effective > profile.total_area() {
            return Err(Error::construction(format!(
                "skeleton neighbourhood holds area {} < {}",
                profile.total_area(),
                effective
            )));
        }
        let radius = (effective / PI).sqrt();
        Ok(Self {
            capacity,
            shrink,
            skeleton: skel.clone(),
            profile,
            domain: Arc::new(BallRegion::slit(2, effective, 1e-6 * radius)),
        })
    }

    pub fn effective_capacity(&self) -> f64 {
        self.capacity - self.shrink
    }

    pub fn margin(&self) -> f64 {
        self.profile.margin
    }

    pub fn neighborhood(&self) -> SkeletonNeighborhood {
        self.skeleton.neighborhood(self.profile.margin)
    }

    /// Image of the area coordinate and normalised angle.
    pub fn eval_polar(&self, a: f64, phi: f64) -> [f64; 2] {
        let u = self.profile.inverse_cumulative(a);
        [u, self.profile.bottom() + phi * self.profile.width(u)]
    }
}

fn polar(p: &[f64]) -> (f64, f64) {
    let a = PI * (p[0] * p[0] + p[1] * p[1]);
    let phi = (p[1].atan2(p[0]) + PI) / (2.0 * PI);
    (a, phi)
}

impl SmoothMap for DiscToSkeleton {
    fn dim_in(&self) -> usize {
        2
    }

    fn dim_out(&self) -> usize {
        2
    }

    fn domain(&self) -> SharedRegion {
        self.domain.clone()
    }

    fn eval(&self, p: &[f64]) -> Vec<f64> {
        let (a, phi) = polar(p);
        self.eval_polar(a, phi).to_vec()
    }

    fn jacobian(&self, p: &[f64]) -> Option<DMatrix<f64>> {
        let (x, y) = (p[0], p[1]);
        let r2 = x * x + y * y;
        let (a, phi) = polar(p);
        let u = self.profile.inverse_cumulative(a);
        let w = self.profile.width(u);
        let dw = self.profile.width_deriv(u);
        let (ax, ay) = (2.0 * PI * x, 2.0 * PI * y);
        let (phx, phy) = (-y / (2.0 * PI * r2), x / (2.0 * PI * r2));
        let (ux, uy) = (ax / w, ay / w);
        Some(DMatrix::from_row_slice(
            2,
            2,
            &[ux, uy, phx * w + phi * dw * ux, phy * w + phi * dw * uy],
        ))
    }

    fn inverse(&self, q: &[f64]) -> Option<Vec<f64>> {
        let (u, v) = (q[0], q[1]);
        if u < self.profile.u_start || u > self.profile.u_end {
            return None;
        }
        let a = self.profile.cumulative(u);
        let phi = (v - self.profile.bottom()) / self.profile.width(u);
        if !(0.0..=1.0).contains(&phi) {
            return None;
        }
        let theta = 2.0 * PI * phi - PI;
        let r = (a / PI).sqrt();
        Some(vec![r * theta.cos(), r * theta.sin()])
    }

    fn name(&self) -> String {
        "disc_to_skeleton".into()
    }
}

/// [`DiscToSkeleton`] with the default shrinking `1e−3·C`.
pub fn disc_to_skeleton(capacity: f64, skel: &PlanarSkeleton, margin: f64) -> Result<DiscToSkeleton> {
    DiscToSkeleton::new(capacity, skel, margin, DEFAULT_SHRINK_FRACTION * capacity)
}

/// `B²(c) → [−c/h, 0] × [0, h]`, `(a, φ) ↦ (−a/h, (1 − φ)h)`; concentric
/// sub-discs `B²(sc)` land in `[−sc/h, 0] × [0, h]`.
#[derive(Clone)]
pub struct PolarRectangle {
    pub capacity: f64,
    pub height: f64,
    domain: Arc<BallRegion>,
}

impl PolarRectangle {
    pub fn new(capacity: f64, height: f64) -> Result<Self> {
        if !(capacity > 0.0 && height > 0.0) {
            return Err(Error::input("capacity and height must be positive"));
        }
        let radius = (capacity / PI).sqrt();
        Ok(Self {
            capacity,
            height,
            domain: Arc::new(BallRegion::slit(2, capacity, 1e-6 * radius)),
        })
    }
}

impl SmoothMap for PolarRectangle {
    fn dim_in(&self) -> usize {
        2
    }

    fn dim_out(&self) -> usize {
        2
    }

    fn domain(&self) -> SharedRegion {
        self.domain.clone()
    }

    fn eval(&self, p: &[f64]) -> Vec<f64> {
        let (a, phi) = polar(p);
        vec![-a / self.height, (1.0 - phi) * self.height]
    }

    fn jacobian(&self, p: &[f64]) -> Option<DMatrix<f64>> {
        let (x, y) = (p[0], p[1]);
        let r2 = x * x + y * y;
        let h = self.height;
        Some(DMatrix::from_row_slice(
            2,
            2,
            &[-2.0 * PI * x / h, -2.0 * PI * y / h, y * h / (2.0 * PI * r2), -x * h / (2.0 * PI * r2)],
        ))
    }

    fn inverse(&self, q: &[f64]) -> Option<Vec<f64>> {
        let a = -q[0] * self.height;
        let phi = 1.0 - q[1] / self.height;
        if a < 0.0 || !(0.0..=1.0).contains(&phi) {
            return None;
        }
        let theta = 2.0 * PI * phi - PI;
        let r = (a / PI).sqrt();
        Some(vec![r * theta.cos(), r * theta.sin()])
    }

    fn name(&self) -> String {
        "polar_rectangle".into()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map::{area_defect, default_step, fine_step, jacobian_agreement};
    use crate::region::Region;
    use crate::sampling::sample_interior;
    use crate::skeleton::{build_yn, build_z_profile, Component, PlanarSkeleton, Rect, DEFAULT_MIN_AREA};

    fn samples(g: &DiscToSkeleton, k: usize) -> Vec<Vec<f64>> {
        let d = g.domain();
        let step = default_step(d.as_ref());
        sample_interior(d.as_ref(), k, 7, 2.0 * step).unwrap()
    }

    #[test]
    fn single_rectangle_is_area_preserving() {
        let skel = PlanarSkeleton::new(vec![Component::Rect(Rect::new(0.0, 1.0, 0.0, 2.0).unwrap())]).unwrap();
        let g = disc_to_skeleton(2.0, &skel, 0.01).unwrap();
        let pts = samples(&g, 10_000);
        let step = default_step(g.domain().as_ref());
        assert!(area_defect(&g, &pts, step).unwrap() < 1e-6);
        let analytic_det_err = pts
            .iter()
            .map(|p| (g.jacobian(p).unwrap().determinant() - 1.0).abs())
            .fold(0.0, f64::max);
        assert!(analytic_det_err < 1e-8, "{analytic_det_err}");
    }

    #[test]
    fn analytic_jacobian_matches_differences() {
        let skel = build_yn(3, 1.0).unwrap();
        let g = disc_to_skeleton(1.0, &skel, 0.01).unwrap();
        let pts = samples(&g, 2_000);
        let agree = jacobian_agreement(&g, &pts, fine_step(g.domain().as_ref())).unwrap();
        assert!(agree < 1e-5, "{agree}");
    }

    #[test]
    fn lisa_profile_small_disc_near_first_rectangle() {
        let skel = build_z_profile(2.0, 1.0, DEFAULT_MIN_AREA).unwrap();
        let margin = 0.01;
        let g = disc_to_skeleton(2.0, &skel, margin).unwrap();
        let p1 = skel.rects().next().copied().unwrap();
        let inner = BallRegion::slit(2, 1.0, 1e-6);
        for p in sample_interior(&inner, 5_000, 3, 0.0).unwrap() {
            let q = g.eval(&p);
            assert!(p1.distance(&q) <= margin, "{p:?} -> {q:?}");
        }
    }

    #[test]
    fn image_stays_in_neighbourhood_and_inverts() {
        let skel = build_yn(2, 1.0).unwrap();
        let g = disc_to_skeleton(1.0, &skel, 0.01).unwrap();
        let nb = g.neighborhood();
        for p in samples(&g, 5_000) {
            let q = g.eval(&p);
            assert!(nb.contains(&q), "{q:?}");
            let back = g.inverse(&q).unwrap();
            assert!((back[0] - p[0]).abs() < 1e-9 && (back[1] - p[1]).abs() < 1e-9);
        }
    }

    #[test]
    fn small_capacity_never_reaches_segment() {
        let skel = build_z_profile(2.0, 1.0, DEFAULT_MIN_AREA).unwrap();
        let g = disc_to_skeleton(0.5, &skel, 0.01).unwrap();
        let p1 = skel.rects().next().copied().unwrap();
        for p in samples(&g, 2_000) {
            assert!(g.eval(&p)[0] <= p1.u_max);
        }
    }

    #[test]
    fn polar_rectangle_is_area_preserving() {
        let g = PolarRectangle::new(1.0, 1.0).unwrap();
        let d = g.domain();
        let pts = sample_interior(d.as_ref(), 2_000, 9, 2.0 * default_step(d.as_ref())).unwrap();
        assert!(area_defect(&g, &pts, default_step(d.as_ref())).unwrap() < 1e-6);
        assert!(jacobian_agreement(&g, &pts, fine_step(d.as_ref())).unwrap() < 1e-5);
        for p in &pts {
            let q = g.eval(p);
            assert!(q[0] <= 0.0 && q[0] > -1.0 && q[1] > 0.0 && q[1] < 1.0);
            let b = g.inverse(&q).unwrap();
            assert!((b[0] - p[0]).abs() < 1e-12 && (b[1] - p[1]).abs() < 1e-12);
        }
    }

    #[test]
    fn too_small_skeleton_is_rejected() {
        let skel = build_yn(2, 1.0).unwrap();
        assert!(matches!(disc_to_skeleton(3.0, &skel, 0.01), Err(Error::Construction(_))));
    }
}

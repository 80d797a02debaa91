//! The carrier strip `S = ⊔P_i ∪ ⊔Q_i`, its translation `τ_S` and the
//! annulus quotient `X = S/τ_S`.
//!
//! The strip is a smooth periodic envelope `β(u) < v < t(u)` around the
//! rectangles `P_i` (raised top) and the pockets `Q_i` (lowered bottom),
//! with a baseline band of height `m` along the spine.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::map::SmoothMap;
use crate::region::{PredicateRegion, SharedRegion};
use crate::skeleton::Rect;
use crate::smooth::BumpFunction;

/// Periodic envelope with period `T = rect_width + 1`; the `i`-th rectangle
/// starts at `origin + iT`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StripEnvelope {
    pub origin: f64,
    pub rect_width: f64,
    pub rect_height: f64,
    pub depth: f64,
    pub margin: f64,
    pub mu: f64,
    pub zeta: f64,
}

impl StripEnvelope {
    pub fn new(rect_width: f64, rect_height: f64, depth: f64, margin: f64, mu: f64, zeta: f64) -> Result<Self> {
        if !(rect_width > 0.0 && rect_height > 0.0 && margin > 0.0 && zeta > 0.0) {
            return Err(Error::input("strip widths, heights, margin and collar must be positive"));
        }
        if !(depth >= 0.0) {
            return Err(Error::input(format!("pocket depth must be non-negative, got {depth}")));
        }
        if !(mu >= margin && mu < 0.25) {
            return Err(Error::input(format!("need margin ≤ μ < 1/4, got μ = {mu}, margin = {margin}")));
        }
        if 0.5 * mu + zeta > 0.5 || zeta > 0.5 * margin.max(mu) {
            return Err(Error::input(format!("collar ζ = {zeta} too wide")));
        }
        Ok(Self {
            origin: 0.0,
            rect_width,
            rect_height,
            depth,
            margin,
            mu,
            zeta,
        })
    }

    pub fn period(&self) -> f64 {
        self.rect_width + 1.0
    }

    fn raise(&self) -> BumpFunction {
        let h = 0.5 * self.margin;
        BumpFunction::new(self.rect_height, -h, self.rect_width + h, self.zeta)
    }

    fn pocket(&self) -> BumpFunction {
        let h = 0.5 * self.mu;
        BumpFunction::new(self.depth, self.rect_width + h, self.period() - h, self.zeta)
    }

    fn split(&self, u: f64) -> (f64, f64) {
        let t = self.period();
        let k = ((u - self.origin) / t).floor();
        (k, u - self.origin - k * t)
    }

    fn periodic(&self, b: &BumpFunction, x: f64, f: impl Fn(&BumpFunction, f64) -> f64) -> f64 {
        let t = self.period();
        (-1..=1).map(|j| f(b, x - j as f64 * t)).sum()
    }

    pub fn top(&self, u: f64) -> f64 {
        let (_, x) = self.split(u);
        0.5 * self.margin + self.periodic(&self.raise(), x, BumpFunction::value)
    }

    pub fn bottom(&self, u: f64) -> f64 {
        let (_, x) = self.split(u);
        -0.5 * self.margin - self.periodic(&self.pocket(), x, BumpFunction::value)
    }

    pub fn top_deriv(&self, u: f64) -> f64 {
        let (_, x) = self.split(u);
        self.periodic(&self.raise(), x, BumpFunction::deriv)
    }

    pub fn bottom_deriv(&self, u: f64) -> f64 {
        let (_, x) = self.split(u);
        -self.periodic(&self.pocket(), x, BumpFunction::deriv)
    }

    pub fn width(&self, u: f64) -> f64 {
        self.top(u) - self.bottom(u)
    }

    /// Area of one period: `mT + h(w + m + ζ) + e(1 − μ + ζ)`.
    pub fn period_area(&self) -> f64 {
        self.margin * self.period()
            + self.rect_height * (self.rect_width + self.margin + self.zeta)
            + self.depth * (1.0 - self.mu + self.zeta)
    }

    /// `∫_{origin}^{u} (t − β)`, so that `W(u + T) = W(u) + period_area`.
    pub fn cumulative(&self, u: f64) -> f64 {
        let (k, x) = self.split(u);
        let lift = |b: &BumpFunction| self.periodic(b, x, BumpFunction::integral) - self.periodic(b, 0.0, BumpFunction::integral);
        k * self.period_area() + self.margin * x + lift(&self.raise()) + lift(&self.pocket())
    }

    /// Inverse of [`cumulative`](Self::cumulative).
    pub fn inverse_cumulative(&self, w: f64) -> f64 {
        let ap = self.period_area();
        let k = (w / ap).floor();
        let target = w - k * ap;
        let base = self.origin + k * self.period();
        let (mut lo, mut hi) = (base, base + self.period());
        let mut u = base + target / ap * self.period();
        for _ in 0..200 {
            let f = self.cumulative(u) - w;
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

    pub fn contains(&self, p: &[f64]) -> bool {
        self.bottom(p[0]) < p[1] && p[1] < self.top(p[0])
    }

    /// Lowest point of the envelope.
    pub fn v_min(&self) -> f64 {
        -0.5 * self.margin - self.depth
    }

    pub fn v_max(&self) -> f64 {
        0.5 * self.margin + self.rect_height
    }
}

/// `S` together with its rectangles, translation step and quotient area.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StripWithQuotient {
    pub envelope: StripEnvelope,
    pub count: usize,
    pub p_rects: Vec<Rect>,
    pub q_rects: Vec<Rect>,
    pub step: f64,
    /// Nominal quotient area `A = (rectangle area) + e`.
    pub area: f64,
}

impl StripWithQuotient {
    /// Strip over a chain of `count` rectangles `w × h` joined by unit
    /// segments, with pockets of depth `e` below the segments.
    pub fn new(count: usize, envelope: StripEnvelope) -> Result<Self> {
        if count == 0 {
            return Err(Error::input("strip needs at least one rectangle"));
        }
        let t = envelope.period();
        let w = envelope.rect_width;
        let mut p_rects = Vec::with_capacity(count);
        let mut q_rects = Vec::with_capacity(count);
        for i in 0..count {
            let a = envelope.origin + i as f64 * t;
            p_rects.push(Rect::new(a, a + w, 0.0, envelope.rect_height)?);
            if envelope.depth > 0.0 {
                q_rects.push(Rect::new(a + w, a + t, -envelope.depth, 0.0)?);
            }
        }
        Ok(Self {
            area: w * envelope.rect_height + envelope.depth,
            envelope,
            count,
            p_rects,
            q_rects,
            step: t,
        })
    }

    /// The strip of `Y_N(κ)` with pocket depth `e`: `A = κ/N + e`.
    pub fn for_yn(n: usize, kappa: f64, e: f64, margin: f64, mu: f64, zeta: f64) -> Result<Self> {
        if n == 0 || !(kappa > 0.0) {
            return Err(Error::input("need N ≥ 1 and κ > 0"));
        }
        Self::new(n, StripEnvelope::new(1.0 / n as f64, kappa, e, margin, mu, zeta)?)
    }

    pub fn translate(&self, p: &[f64], k: i64) -> Vec<f64> {
        let mut q = p.to_vec();
        q[0] += k as f64 * self.step;
        q
    }

    /// Region covering the rectangles plus one period on either side.
    pub fn region(&self) -> PredicateRegion {
        let env = self.envelope;
        let t = self.step;
        PredicateRegion {
            lo: vec![env.origin - t, env.v_min()],
            hi: vec![env.origin + (self.count as f64 + 1.0) * t, env.v_max()],
            predicate: Arc::new(move |p| env.contains(p)),
        }
    }
}

/// `S → X ⊂ B²(a₀ + area per period)`, constant on `τ_S`-orbits.
#[derive(Clone)]
pub struct AnnulusQuotient {
    pub strip: StripWithQuotient,
    pub eps: f64,
    pub inner: f64,
    domain: Arc<PredicateRegion>,
}

impl AnnulusQuotient {
    pub fn capacity(&self) -> f64 {
        self.inner + self.strip.envelope.period_area()
    }

    fn area_angle(&self, p: &[f64]) -> (f64, f64, f64) {
        let env = &self.strip.envelope;
        let (u, v) = (p[0], p[1]);
        let ap = env.period_area();
        let (b, w) = (env.bottom(u), env.width(u));
        let a = self.inner + ap * (1.0 - (v - b) / w);
        let theta = 2.0 * PI * env.cumulative(u) / ap;
        (a, theta, w)
    }
}

impl SmoothMap for AnnulusQuotient {
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
        let (a, theta, _) = self.area_angle(p);
        let r = (a / PI).sqrt();
        vec![r * theta.cos(), r * theta.sin()]
    }

    fn jacobian(&self, p: &[f64]) -> Option<DMatrix<f64>> {
        let env = &self.strip.envelope;
        let (u, v) = (p[0], p[1]);
        let ap = env.period_area();
        let (a, theta, w) = self.area_angle(p);
        let (b, db) = (env.bottom(u), env.bottom_deriv(u));
        let dw = env.top_deriv(u) - db;
        let a_u = ap * (db * w + (v - b) * dw) / (w * w);
        let a_v = -ap / w;
        let t_u = 2.0 * PI * w / ap;
        let r = (a / PI).sqrt();
        let (c, s) = (theta.cos(), theta.sin());
        let (xa, xt) = (c / (2.0 * PI * r), -r * s);
        let (ya, yt) = (s / (2.0 * PI * r), r * c);
        Some(DMatrix::from_row_slice(
            2,
            2,
            &[xa * a_u + xt * t_u, xa * a_v, ya * a_u + yt * t_u, ya * a_v],
        ))
    }

    /// Representative in the fundamental domain `[origin, origin + T)`.
    fn inverse(&self, q: &[f64]) -> Option<Vec<f64>> {
        let env = &self.strip.envelope;
        let ap = env.period_area();
        let a = PI * (q[0] * q[0] + q[1] * q[1]);
        if a < self.inner || a > self.capacity() {
            return None;
        }
        let theta = q[1].atan2(q[0]).rem_euclid(2.0 * PI);
        let u = env.inverse_cumulative(ap * theta / (2.0 * PI));
        let v = env.bottom(u) + env.width(u) * (1.0 - (a - self.inner) / ap);
        Some(vec![u, v])
    }

    fn name(&self) -> String {
        "annulus_quotient".into()
    }
}

/// Quotient of the strip by `τ_S` into `B²(A + ε)`. The overhead of the
/// smooth envelope over the nominal area `A` must fit inside `ε`; half of
/// what remains becomes the inner hole `a₀`.
pub fn annulus_quotient(strip: &StripWithQuotient, eps: f64) -> Result<AnnulusQuotient> {
    if !(eps > 0.0) {
        return Err(Error::input(format!("ε must be positive, got {eps}")));
    }
    let ap = strip.envelope.period_area();
    let slack = strip.area + eps - ap;
    if !(slack > 0.0) {
        return Err(Error::construction(format!(
            "strip area per period {ap} exceeds A + ε = {}",
            strip.area + eps
        )));
    }
    Ok(AnnulusQuotient {
        strip: strip.clone(),
        eps,
        inner: 0.5 * slack,
        domain: Arc::new(strip.region()),
    })
}

/// A rectangle `[0, ℓ] × [0, 1]` rolled into an annulus of area `ℓ` by
/// identifying its vertical edges.
#[derive(Clone)]
pub struct RectAnnulus {
    pub length: f64,
    pub inner: f64,
    domain: Arc<PredicateRegion>,
}

impl RectAnnulus {
    pub fn capacity(&self) -> f64 {
        self.inner + self.length
    }
}

/// Rolls `R ∪ R′` of area `e + c` (unit height) into an annulus.
pub fn rect_to_annulus_with_wrap(e: f64, c: f64, eps: f64) -> Result<RectAnnulus> {
    if !(c > 0.0) || !(e >= 0.0) || !(eps > 0.0) {
        return Err(Error::input(format!("need c > 0, e ≥ 0, ε > 0; got c = {c}, e = {e}, ε = {eps}")));
    }
    let length = e + c;
    Ok(RectAnnulus {
        length,
        inner: 0.5 * eps,
        domain: Arc::new(PredicateRegion {
            lo: vec![-length, 0.0],
            hi: vec![2.0 * length, 1.0],
            predicate: Arc::new(|p: &[f64]| p[1] > 0.0 && p[1] < 1.0),
        }),
    })
}

impl SmoothMap for RectAnnulus {
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
        let a = self.inner + self.length * (1.0 - p[1]);
        let theta = 2.0 * PI * p[0] / self.length;
        let r = (a / PI).sqrt();
        vec![r * theta.cos(), r * theta.sin()]
    }

    fn jacobian(&self, p: &[f64]) -> Option<DMatrix<f64>> {
        let a = self.inner + self.length * (1.0 - p[1]);
        let theta = 2.0 * PI * p[0] / self.length;
        let r = (a / PI).sqrt();
        let (c, s) = (theta.cos(), theta.sin());
        let t_u = 2.0 * PI / self.length;
        let a_v = -self.length;
        Some(DMatrix::from_row_slice(
            2,
            2,
            &[-r * s * t_u, c / (2.0 * PI * r) * a_v, r * c * t_u, s / (2.0 * PI * r) * a_v],
        ))
    }

    fn inverse(&self, q: &[f64]) -> Option<Vec<f64>> {
        let a = PI * (q[0] * q[0] + q[1] * q[1]);
        if a <= self.inner || a >= self.capacity() {
            return None;
        }
        let theta = q[1].atan2(q[0]).rem_euclid(2.0 * PI);
        Some(vec![theta / (2.0 * PI) * self.length, 1.0 - (a - self.inner) / self.length])
    }

    fn name(&self) -> String {
        "rect_to_annulus".into()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map::{area_defect, default_step, fine_step, jacobian_agreement};
    use crate::sampling::sample_interior;

    fn yn_strip() -> StripWithQuotient {
        StripWithQuotient::for_yn(4, 1.0, 0.5, 0.01, 0.01, 0.005).unwrap()
    }

    #[test]
    fn nominal_area_and_target_capacity() {
        let s = yn_strip();
        assert!((s.area - 0.75).abs() < 1e-15);
        let q = annulus_quotient(&s, 0.05).unwrap();
        assert!(q.capacity() <= 0.8 + 1e-12);
        let flat = StripWithQuotient::for_yn(4, 1.0, 0.0, 0.01, 0.01, 0.005).unwrap();
        assert_eq!(flat.area, 0.25);
        assert!(flat.q_rects.is_empty());
    }

    #[test]
    fn period_area_matches_quadrature() {
        let env = yn_strip().envelope;
        let t = env.period();
        let n = 200_000;
        let h = t / n as f64;
        let sum: f64 = (0..n).map(|k| env.width((k as f64 + 0.5) * h)).sum::<f64>() * h;
        assert!((sum - env.period_area()).abs() < 1e-8);
        assert!((env.cumulative(t) - env.period_area()).abs() < 1e-12);
        assert!((env.inverse_cumulative(env.cumulative(0.77)) - 0.77).abs() < 1e-12);
    }

    #[test]
    fn translation_maps_rectangles_exactly() {
        let s = yn_strip();
        for i in 0..3 {
            let p = s.p_rects[i].translated(s.step);
            assert!((p.u_min - s.p_rects[i + 1].u_min).abs() < 1e-15);
            let q = s.q_rects[i].translated(s.step);
            assert!((q.u_max - s.q_rects[i + 1].u_max).abs() < 1e-15);
        }
    }

    #[test]
    fn quotient_identifies_translates() {
        let s = yn_strip();
        let q = annulus_quotient(&s, 0.05).unwrap();
        let region = s.region();
        let pts = sample_interior(&region, 100, 11, 0.0).unwrap();
        for p in pts {
            let shifted = s.translate(&p, 1);
            let (a, b) = (q.eval(&p), q.eval(&shifted));
            assert!((a[0] - b[0]).abs() < 1e-9 && (a[1] - b[1]).abs() < 1e-9);
        }
    }

    #[test]
    fn quotient_is_area_preserving() {
        let s = yn_strip();
        let q = annulus_quotient(&s, 0.05).unwrap();
        let d = q.domain();
        let pts = sample_interior(d.as_ref(), 10_000, 2, 2.0 * default_step(d.as_ref())).unwrap();
        let dets = pts
            .iter()
            .map(|p| (q.jacobian(p).unwrap().determinant() - 1.0).abs())
            .fold(0.0, f64::max);
        assert!(dets < 1e-9, "{dets}");
        assert!(jacobian_agreement(&q, &pts[..1000], fine_step(d.as_ref())).unwrap() < 1e-5);
        for p in &pts[..1000] {
            let back = q.inverse(&q.eval(p)).unwrap();
            let k = ((p[0] - back[0]) / s.step).round();
            assert!((back[0] + k * s.step - p[0]).abs() < 1e-9 && (back[1] - p[1]).abs() < 1e-9);
        }
    }

    #[test]
    fn overfull_strip_is_rejected() {
        let s = StripWithQuotient::for_yn(4, 1.0, 0.5, 0.05, 0.05, 0.02).unwrap();
        assert!(matches!(annulus_quotient(&s, 0.01), Err(Error::Construction(_))));
    }

    #[test]
    fn rect_annulus_area_and_edges() {
        let r = rect_to_annulus_with_wrap(1.0, 1.0, 0.01).unwrap();
        assert_eq!(r.length, 2.0);
        assert!(rect_to_annulus_with_wrap(1.0, 0.0, 0.01).is_err());
        for k in 0..100 {
            let v = 0.005 + 0.99 * k as f64 / 100.0;
            let (a, b) = (r.eval(&[0.0, v]), r.eval(&[2.0, v]));
            assert!((a[0] - b[0]).abs() < 1e-12 && (a[1] - b[1]).abs() < 1e-12);
        }
        let d = r.domain();
        let pts = sample_interior(d.as_ref(), 2_000, 4, default_step(d.as_ref())).unwrap();
        assert!(area_defect(&r, &pts, default_step(d.as_ref())).unwrap() < 1e-6);
    }
}

//! Regions of ℝᵈ used as map domains and sampling targets.

use std::sync::Arc;

use crate::symplectic::capacity_level;

pub trait Region: Send + Sync {
    fn dim(&self) -> usize;

    fn contains(&self, p: &[f64]) -> bool;

    /// Axis-aligned bounding box `(lo, hi)`.
    fn bounds(&self) -> (Vec<f64>, Vec<f64>);

    /// `p` and its axis neighbours at distance `r` all lie in the region.
    fn contains_with_margin(&self, p: &[f64], r: f64) -> bool {
        if !self.contains(p) {
            return false;
        }
        let mut q = p.to_vec();
        for i in 0..p.len() {
            for sign in [-1.0, 1.0] {
                q[i] = p[i] + sign * r;
                if !self.contains(&q) {
                    return false;
                }
            }
            q[i] = p[i];
        }
        true
    }

    fn diameter(&self) -> f64 {
        let (lo, hi) = self.bounds();
        lo.iter()
            .zip(&hi)
            .map(|(a, b)| (b - a) * (b - a))
            .sum::<f64>()
            .sqrt()
    }
}

pub type SharedRegion = Arc<dyn Region>;

#[derive(Debug, Clone, PartialEq)]
pub struct BoxRegion {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl BoxRegion {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Self {
        debug_assert_eq!(lo.len(), hi.len());
        Self { lo, hi }
    }

    pub fn cube(dim: usize, half: f64) -> Self {
        Self::new(vec![-half; dim], vec![half; dim])
    }
}

impl Region for BoxRegion {
    fn dim(&self) -> usize {
        self.lo.len()
    }

    fn contains(&self, p: &[f64]) -> bool {
        p.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(x, (a, b))| *a <= *x && *x <= *b)
    }

    fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
        (self.lo.clone(), self.hi.clone())
    }
}

/// Open ball of a given capacity, optionally with a polar-chart singular set
/// removed from its last two coordinates.
///
/// `guard > 0` removes the `guard`-neighbourhood of the planar centre; with
/// `slit` it also removes the `guard`-neighbourhood of the negative `x` ray
/// in that plane (the cut of the polar angle).
#[derive(Debug, Clone, PartialEq)]
pub struct BallRegion {
    pub center: Vec<f64>,
    pub capacity: f64,
    pub guard: f64,
    pub slit: bool,
}

impl BallRegion {
    pub fn new(dim: usize, capacity: f64) -> Self {
        Self {
            center: vec![0.0; dim],
            capacity,
            guard: 0.0,
            slit: false,
        }
    }

    pub fn punctured(dim: usize, capacity: f64, guard: f64) -> Self {
        Self {
            guard,
            ..Self::new(dim, capacity)
        }
    }

    pub fn slit(dim: usize, capacity: f64, guard: f64) -> Self {
        Self {
            guard,
            slit: true,
            ..Self::new(dim, capacity)
        }
    }

    pub fn radius(&self) -> f64 {
        (self.capacity / std::f64::consts::PI).sqrt()
    }
}

impl BallRegion {
    fn clear_of_boundary(&self, p: &[f64], r: f64) -> bool {
        let dist = p
            .iter()
            .zip(&self.center)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        if dist + r >= self.radius() {
            return false;
        }
        if self.guard > 0.0 {
            let d = p.len();
            let wx = p[d - 2] - self.center[d - 2];
            let wy = p[d - 1] - self.center[d - 1];
            if wx.hypot(wy) < self.guard + r {
                return false;
            }
            if self.slit && wx < r && wy.abs() < self.guard + r {
                return false;
            }
        }
        true
    }
}

impl Region for BallRegion {
    fn dim(&self) -> usize {
        self.center.len()
    }

    fn contains(&self, p: &[f64]) -> bool {
        capacity_level(p, &self.center) < self.capacity && self.clear_of_boundary(p, 0.0)
    }

    fn contains_with_margin(&self, p: &[f64], r: f64) -> bool {
        self.contains(p) && self.clear_of_boundary(p, r)
    }

    fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
        let r = self.radius();
        (
            self.center.iter().map(|c| c - r).collect(),
            self.center.iter().map(|c| c + r).collect(),
        )
    }
}

/// Cartesian product of regions, coordinates concatenated in order.
#[derive(Clone)]
pub struct ProductRegion {
    pub factors: Vec<SharedRegion>,
}

impl ProductRegion {
    pub fn new(factors: Vec<SharedRegion>) -> Self {
        Self { factors }
    }
}

impl Region for ProductRegion {
    fn dim(&self) -> usize {
        self.factors.iter().map(|f| f.dim()).sum()
    }

    fn contains(&self, p: &[f64]) -> bool {
        let mut offset = 0;
        self.factors.iter().all(|f| {
            let d = f.dim();
            let ok = f.contains(&p[offset..offset + d]);
            offset += d;
            ok
        })
    }

    fn contains_with_margin(&self, p: &[f64], r: f64) -> bool {
        let mut offset = 0;
        self.factors.iter().all(|f| {
            let d = f.dim();
            let ok = f.contains_with_margin(&p[offset..offset + d], r);
            offset += d;
            ok
        })
    }

    fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
        let mut lo = Vec::new();
        let mut hi = Vec::new();
        for f in &self.factors {
            let (l, h) = f.bounds();
            lo.extend(l);
            hi.extend(h);
        }
        (lo, hi)
    }
}

pub type Predicate = Arc<dyn Fn(&[f64]) -> bool + Send + Sync>;

/// Region given by a membership predicate inside a bounding box.
#[derive(Clone)]
pub struct PredicateRegion {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub predicate: Predicate,
}

impl Region for PredicateRegion {
    fn dim(&self) -> usize {
        self.lo.len()
    }

    fn contains(&self, p: &[f64]) -> bool {
        p.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(x, (a, b))| *a <= *x && *x <= *b)
            && (self.predicate)(p)
    }

    fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
        (self.lo.clone(), self.hi.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slit_ball_excludes_negative_ray() {
        let b = BallRegion::slit(2, std::f64::consts::PI, 1e-3);
        assert!(b.contains(&[0.5, 0.0]));
        assert!(!b.contains(&[-0.5, 0.0]));
        assert!(b.contains(&[-0.5, 0.01]));
        assert!(!b.contains(&[0.0, 0.0]));
        assert!(!b.contains(&[1.0, 0.1]));
    }

    #[test]
    fn product_region_splits_coordinates() {
        let p = ProductRegion::new(vec![
            Arc::new(BoxRegion::cube(2, 1.0)),
            Arc::new(BallRegion::new(2, 1.0)),
        ]);
        assert_eq!(p.dim(), 4);
        assert!(p.contains(&[0.9, -0.9, 0.1, 0.1]));
        assert!(!p.contains(&[0.9, -0.9, 0.6, 0.1]));
        assert!(p.contains_with_margin(&[0.0, 0.0, 0.0, 0.0], 0.1));
        assert!(!p.contains_with_margin(&[0.95, 0.0, 0.0, 0.0], 0.1));
    }
}

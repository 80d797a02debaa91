//! `B^{2n+2}(C) ↪ N(Z_{C,c})`: the disc factor is spread over the skeleton
//! `P₁ ∪ L ∪ P₂` by an area-preserving map, so the fibre over the far
//! rectangle only sees the part of the ball of capacity at most `c`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::ball::EmbeddedBall;
use crate::error::{Error, Result};
use crate::map::SmoothMap;
use crate::profile::{DiscToSkeleton, DEFAULT_SHRINK_FRACTION};
use crate::region::{BallRegion, Region};
use crate::skeleton::{build_z_profile, PlanarSkeleton, Rect, DEFAULT_MIN_AREA};
use crate::symplectic::capacity_level;

use super::chain::fibered_lift;

#[derive(Clone)]
pub struct LisaEmbedding {
    pub ball: EmbeddedBall,
    pub skeleton: PlanarSkeleton,
    pub lift: Arc<DiscToSkeleton>,
    pub big: f64,
    pub small: f64,
    pub n: usize,
    pub margin: f64,
}

/// Fibre capacities over the neighbourhood of the far rectangle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiberReport {
    /// Largest `capacity − W(u)` over sampled `u` in `N(P₂)`; `W` is the
    /// disc area swept before `u`.
    pub max_fiber_capacity: f64,
    /// Largest `π|z|²` over sampled image points above `N(P₂)`.
    pub max_sampled_level: f64,
    pub samples: usize,
    pub bound: f64,
    pub passed: bool,
}

/// `B^{2n+2}(C − δ) → ℝ²ⁿ × N(Z_{C,c})`.
pub fn lisa_ball_embedding(big: f64, small: f64, n: usize, margin: Option<f64>) -> Result<LisaEmbedding> {
    if n == 0 {
        return Err(Error::input("need n ≥ 1"));
    }
    let skeleton = build_z_profile(big, small, DEFAULT_MIN_AREA)?;
    let margin = margin.unwrap_or_else(|| skeleton.default_margin());
    let shrink = DEFAULT_SHRINK_FRACTION * big;
    let lift = Arc::new(DiscToSkeleton::new(big, &skeleton, margin, shrink)?);
    let map = fibered_lift(Arc::new(BallRegion::new(2 * n, big)), lift.clone());
    let ball = EmbeddedBall::new(lift.effective_capacity(), Arc::new(map))?;
    Ok(LisaEmbedding {
        ball,
        skeleton,
        lift,
        big,
        small,
        n,
        margin,
    })
}

impl LisaEmbedding {
    pub fn far_rect(&self) -> Rect {
        *self.skeleton.rects().last().expect("Z has two rectangles")
    }

    pub fn fiber_check(&self, samples: usize, seed: u64) -> Result<FiberReport> {
        let p2 = self.far_rect();
        let d = 2 * self.n;
        let cap = self.ball.capacity();
        let tol = 1e-9 * self.big;
        let mut max_fiber = f64::NEG_INFINITY;
        let steps = samples.max(2);
        let (lo, hi) = (p2.u_min - self.margin, p2.u_max + self.margin);
        for i in 0..steps {
            let u = lo + (hi - lo) * (i as f64 + 0.5) / steps as f64;
            max_fiber = max_fiber.max(cap - self.lift.profile.cumulative(u));
        }
        let mut max_level = f64::NEG_INFINITY;
        let mut seen = 0;
        for p in self.ball.domain_samples(cap, samples, seed, 0.0)? {
            let y = self.ball.map.eval(&p);
            if p2.distance(&y[d..]) < self.margin {
                seen += 1;
                max_level = max_level.max(capacity_level(&y[..d], &vec![0.0; d]));
            }
        }
        let passed = max_fiber <= self.small + tol && max_level <= self.small + tol;
        Ok(FiberReport {
            max_fiber_capacity: max_fiber,
            max_sampled_level: max_level,
            samples: seen,
            bound: self.small,
            passed,
        })
    }

    /// Image points within the margin neighbourhood of the skeleton.
    pub fn image_in_neighborhood(&self, samples: usize, seed: u64) -> Result<bool> {
        let d = 2 * self.n;
        let nb = self.skeleton.neighborhood(self.margin);
        Ok(self
            .ball
            .image_samples(self.ball.capacity(), samples, seed)?
            .iter()
            .all(|y| nb.contains(&y[d..])))
    }

    pub fn map(&self) -> &dyn SmoothMap {
        self.ball.map.as_ref()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn far_fibres_are_small() {
        let mut l = lisa_ball_embedding(2.0, 1.0, 1, None).unwrap();
        let rep = l.fiber_check(4000, 3).unwrap();
        assert!(rep.passed, "{rep:?}");
        assert!(rep.samples > 0);
        assert!(l.image_in_neighborhood(2000, 4).unwrap());
        let d = l.ball.verify(2000, 1).unwrap();
        assert!(d.max_defect < 1e-6, "{d:?}");
    }

    #[test]
    fn degenerate_ratio_is_rejected() {
        assert!(matches!(lisa_ball_embedding(1.0, 1.0 - 1e-9, 1, None), Err(Error::Input(_))));
        assert!(matches!(lisa_ball_embedding(1.0, 2.0, 1, None), Err(Error::Input(_))));
    }
}

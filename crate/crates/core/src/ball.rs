//! Symplectically embedded balls.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::map::{default_step, pullback_defect_with, DefectReport, JacobianSource, SharedMap};
use crate::region::{Region, SharedRegion};
use crate::sampling::sample_interior;
use crate::symplectic::{capacity_level, BallDescriptor};

/// A map from (a slightly shrunk or punctured copy of) the standard ball.
#[derive(Clone)]
pub struct EmbeddedBall {
    pub descriptor: BallDescriptor,
    pub map: SharedMap,
    pub verification: Option<DefectReport>,
}

impl std::fmt::Debug for EmbeddedBall {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("EmbeddedBall")
            .field("descriptor", &self.descriptor)
            .field("map", &self.map.name())
            .field("verification", &self.verification)
            .finish()
    }
}

/// Summary of a verification run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallRecord {
    pub capacity: f64,
    pub dim: usize,
    pub map: String,
    pub max_defect: Option<f64>,
}

impl EmbeddedBall {
    pub fn new(capacity: f64, map: SharedMap) -> Result<Self> {
        if map.dim_in() != map.dim_out() && map.dim_in() > map.dim_out() {
            return Err(Error::input("ball map cannot lower dimension"));
        }
        Ok(Self {
            descriptor: BallDescriptor::new(capacity, map.dim_in())?,
            map,
            verification: None,
        })
    }

    pub fn capacity(&self) -> f64 {
        self.descriptor.capacity
    }

    pub fn dim(&self) -> usize {
        self.descriptor.dim
    }

    /// Capacity level `π|g⁻¹(q)|²` of an image point, `None` outside the
    /// image.
    pub fn level(&self, q: &[f64]) -> Option<f64> {
        let p = self.map.inverse(q)?;
        Some(capacity_level(&p, &self.descriptor.center))
    }

    /// `level − capacity` for image points, `+∞` off the image: positive
    /// means outside the ball.
    pub fn exterior_margin(&self, q: &[f64]) -> f64 {
        self.exterior_margin_of(q, self.capacity())
    }

    pub fn exterior_margin_of(&self, q: &[f64], capacity: f64) -> f64 {
        match self.level(q) {
            Some(l) => l - capacity,
            None => f64::INFINITY,
        }
    }

    /// Quasi-random points of the domain lying in the concentric sub-ball of
    /// the given capacity.
    pub fn domain_samples(&self, capacity: f64, count: usize, seed: u64, margin: f64) -> Result<Vec<Vec<f64>>> {
        let dom = self.map.domain();
        let center = self.descriptor.center.clone();
        let (lo, hi) = dom.bounds();
        let r = (capacity / std::f64::consts::PI).sqrt();
        let lo = lo.iter().zip(&center).map(|(l, c)| l.max(c - r)).collect();
        let hi = hi.iter().zip(&center).map(|(h, c)| h.min(c + r)).collect();
        let region = SubBall {
            domain: dom,
            center,
            capacity,
            lo,
            hi,
        };
        sample_interior(&region, count, seed, margin)
    }

    pub fn image_samples(&self, capacity: f64, count: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
        Ok(self
            .domain_samples(capacity, count, seed, 0.0)?
            .iter()
            .map(|p| self.map.eval(p))
            .collect())
    }

    /// Pullback defect on `count` interior samples (closed-form Jacobian when
    /// available); the result is stored on the ball.
    pub fn verify(&mut self, count: usize, seed: u64) -> Result<DefectReport> {
        let step = default_step(self.map.domain().as_ref());
        let pts = self.domain_samples(self.capacity(), count, seed, step)?;
        let rep = pullback_defect_with(self.map.as_ref(), &pts, step, JacobianSource::Auto)?;
        self.verification = Some(rep.clone());
        Ok(rep)
    }

    pub fn record(&self) -> BallRecord {
        BallRecord {
            capacity: self.capacity(),
            dim: self.dim(),
            map: self.map.name(),
            max_defect: self.verification.as_ref().map(|v| v.max_defect),
        }
    }
}

struct SubBall {
    domain: SharedRegion,
    center: Vec<f64>,
    capacity: f64,
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl Region for SubBall {
    fn dim(&self) -> usize {
        self.center.len()
    }

    fn contains(&self, p: &[f64]) -> bool {
        self.domain.contains(p) && capacity_level(p, &self.center) < self.capacity
    }

    fn contains_with_margin(&self, p: &[f64], r: f64) -> bool {
        let inner = self.lo.iter().zip(&self.hi).all(|(a, b)| b - a > 2.0 * r);
        inner && self.domain.contains_with_margin(p, r) && {
            let d: f64 = p.iter().zip(&self.center).map(|(a, c)| (a - c) * (a - c)).sum::<f64>().sqrt();
            std::f64::consts::PI * (d + r) * (d + r) < self.capacity
        }
    }

    fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
        (self.lo.clone(), self.hi.clone())
    }
}

//! Standard symplectic linear algebra on ℝ²ⁿ and capacity conventions.
//!
//! Coordinates are ordered `(x₁, y₁, …, xₙ, yₙ)`, so the matrix of
//! `ω₀ = Σ dxᵢ∧dyᵢ` is block diagonal with blocks `[[0, 1], [−1, 0]]`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymplecticSpace {
    n: usize,
}

impl SymplecticSpace {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::input("half-dimension must be positive"));
        }
        Ok(Self { n })
    }

    pub fn half_dim(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        2 * self.n
    }

    pub fn omega_matrix(&self) -> DMatrix<f64> {
        omega_matrix(self.dim())
    }

    /// `uᵀ Ω₀ v`.
    pub fn omega_eval(&self, u: &[f64], v: &[f64]) -> Result<f64> {
        check_dim(self.dim(), u.len())?;
        check_dim(self.dim(), v.len())?;
        Ok(u.chunks_exact(2)
            .zip(v.chunks_exact(2))
            .map(|(a, b)| a[0] * b[1] - a[1] * b[0])
            .sum())
    }
}

/// Ω₀ for an even dimension `d`.
pub fn omega_matrix(d: usize) -> DMatrix<f64> {
    debug_assert!(d.is_multiple_of(2));
    let mut m = DMatrix::zeros(d, d);
    for i in (0..d).step_by(2) {
        m[(i, i + 1)] = 1.0;
        m[(i + 1, i)] = -1.0;
    }
    m
}

/// Radius of the ball of the given capacity: `sqrt(capacity / π)`.
pub fn capacity_radius(capacity: f64) -> Result<f64> {
    if !(capacity > 0.0) || !capacity.is_finite() {
        return Err(Error::input(format!("capacity must be positive, got {capacity}")));
    }
    Ok((capacity / PI).sqrt())
}

/// Capacity `πr²` of the ball of radius `r`.
pub fn radius_capacity(radius: f64) -> Result<f64> {
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(Error::input(format!("radius must be positive, got {radius}")));
    }
    Ok(PI * radius * radius)
}

/// Symplectic "area level" `π|p − c|²` of a point relative to a centre.
pub fn capacity_level(p: &[f64], center: &[f64]) -> f64 {
    PI * p
        .iter()
        .zip(center)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallDescriptor {
    pub capacity: f64,
    pub dim: usize,
    pub center: Vec<f64>,
}

impl BallDescriptor {
    pub fn new(capacity: f64, dim: usize) -> Result<Self> {
        Self::centered(capacity, vec![0.0; dim])
    }

    pub fn centered(capacity: f64, center: Vec<f64>) -> Result<Self> {
        capacity_radius(capacity)?;
        let dim = center.len();
        if dim == 0 || !dim.is_multiple_of(2) {
            return Err(Error::input(format!("ball dimension must be even and positive, got {dim}")));
        }
        Ok(Self { capacity, dim, center })
    }

    pub fn radius(&self) -> f64 {
        (self.capacity / PI).sqrt()
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        capacity_level(p, &self.center) < self.capacity
    }
}

/// `E(c₁, c₂) = { π(x₁²+y₁²)/c₁ + π(x₂²+y₂²)/c₂ ≤ 1 } ⊂ ℝ⁴`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EllipsoidDescriptor {
    pub c1: f64,
    pub c2: f64,
}

impl EllipsoidDescriptor {
    pub fn new(c1: f64, c2: f64) -> Result<Self> {
        if !(c1 > 0.0 && c2 >= c1) {
            return Err(Error::input(format!("ellipsoid needs 0 < c1 <= c2, got ({c1}, {c2})")));
        }
        Ok(Self { c1, c2 })
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        PI * (p[0] * p[0] + p[1] * p[1]) / self.c1 + PI * (p[2] * p[2] + p[3] * p[3]) / self.c2 <= 1.0
    }

    pub fn is_ball(&self) -> bool {
        self.c1 == self.c2
    }
}

/// Domain whose fibre capacity is measured, fibred over its last two coordinates.
#[derive(Debug, Clone, PartialEq)]
pub enum FiberedDomain {
    Ball(BallDescriptor),
    Ellipsoid(EllipsoidDescriptor),
}

/// A disc in the base plane, described by its area; `Point` and `Empty`
/// are the degenerate cases.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PlanarRegion {
    Disc { area: f64 },
    Point,
    Empty,
}

impl PlanarRegion {
    pub fn area(&self) -> f64 {
        match self {
            PlanarRegion::Disc { area } => *area,
            _ => 0.0,
        }
    }
}

/// The set of base points `w` whose fibre `π⁻¹(w)` has capacity at least `c`.
///
/// For `B²ⁿ⁺²(C)` the fibre over `w` is `B²ⁿ(C − π|w|²)`, so the region is
/// `B²(C − c)`. For `E(c₁, c₂)` the fibre is `B²(c₁(1 − π|w|²/c₂))`, which
/// is the ball fibre of `B⁴(c₂)` scaled by `c₁/c₂`.
pub fn fiber_capacity_region(domain: &FiberedDomain, c: f64) -> Result<PlanarRegion> {
    if !(c > 0.0) {
        return Err(Error::input(format!("fibre capacity threshold must be positive, got {c}")));
    }
    let area = match domain {
        FiberedDomain::Ball(b) => {
            if b.dim < 4 {
                return Err(Error::input("fibred ball needs dimension >= 4"));
            }
            b.capacity - c
        }
        FiberedDomain::Ellipsoid(e) => e.c2 * (1.0 - c / e.c1),
    };
    let scale = match domain {
        FiberedDomain::Ball(b) => b.capacity,
        FiberedDomain::Ellipsoid(e) => e.c2,
    };
    Ok(if area > 1e-12 * scale {
        PlanarRegion::Disc { area }
    } else if area >= -1e-12 * scale {
        PlanarRegion::Point
    } else {
        PlanarRegion::Empty
    })
}

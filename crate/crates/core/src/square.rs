//! Area-preserving map of a disc onto a rounded square (an Lᵖ ball).
//!
//! Polar area `a = πr²` and angle `θ` go to `A = a·f(Θ)`, `Θ = T⁻¹(θ)` where
//! `f = πR²/K_p`, `R(Θ) = (|cos Θ|ᵖ + |sin Θ|ᵖ)^{−1/p}` and `T' = f`. The map
//! is positively homogeneous of degree one, so it sends every concentric
//! sub-disc onto a rounded square of the same area.

use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::map::SmoothMap;
use crate::region::{BallRegion, SharedRegion};

pub const DEFAULT_EXPONENT: i32 = 16;

const PANELS: usize = 64;

// 10-point Gauss–Legendre nodes and weights on [−1, 1].
const GL_X: [f64; 5] = [
    0.148_874_338_981_631_2,
    0.433_395_394_129_247_2,
    0.679_409_568_299_024_4,
    0.865_063_366_688_984_5,
    0.973_906_528_517_171_7,
];
const GL_W: [f64; 5] = [
    0.295_524_224_714_752_9,
    0.269_266_719_309_996_4,
    0.219_086_362_515_982,
    0.149_451_349_150_580_6,
    0.066_671_344_308_688_1,
];

fn gauss_legendre(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
    let mut s = 0.0;
    for (x, w) in GL_X.iter().zip(GL_W) {
        s += w * (f(mid - half * x) + f(mid + half * x));
    }
    s * half
}

/// Area of the unit Lᵖ ball `{|x|ᵖ + |y|ᵖ ≤ 1}`: `4Γ(1+1/p)²/Γ(1+2/p)`.
pub fn lp_ball_area(p: i32) -> f64 {
    let pf = p as f64;
    let r = |t: f64| (t.cos().abs().powf(pf) + t.sin().abs().powf(pf)).powf(-2.0 / pf);
    // ½∮R² on [0, π/2], times four.
    let h = FRAC_PI_2 / PANELS as f64;
    4.0 * 0.5 * (0..PANELS).map(|k| gauss_legendre(r, k as f64 * h, (k + 1) as f64 * h)).sum::<f64>()
}

/// Disc `B²(c)` onto the rounded square of area `c` centred at the origin.
#[derive(Debug, Clone)]
pub struct DiscToSquare {
    pub capacity: f64,
    pub exponent: i32,
    area_unit: f64,
    panel_table: Vec<f64>,
    domain: Arc<BallRegion>,
}

impl DiscToSquare {
    pub fn new(capacity: f64) -> Result<Self> {
        Self::with_exponent(capacity, DEFAULT_EXPONENT)
    }

    pub fn with_exponent(capacity: f64, exponent: i32) -> Result<Self> {
        if !(capacity > 0.0) {
            return Err(Error::input(format!("capacity must be positive, got {capacity}")));
        }
        if exponent < 2 || exponent % 2 != 0 {
            return Err(Error::input("exponent must be an even integer ≥ 2"));
        }
        let area_unit = lp_ball_area(exponent);
        let mut sq = Self {
            capacity,
            exponent,
            area_unit,
            panel_table: Vec::new(),
            domain: Arc::new(BallRegion::punctured(2, capacity, 1e-6 * (capacity / PI).sqrt())),
        };
        let h = FRAC_PI_2 / PANELS as f64;
        let mut acc = 0.0;
        let mut table = vec![0.0];
        for k in 0..PANELS {
            acc += gauss_legendre(|t| sq.density(t), k as f64 * h, (k + 1) as f64 * h);
            table.push(acc);
        }
        sq.panel_table = table;
        Ok(sq)
    }

    /// Half side of the bounding square.
    pub fn half_side(&self) -> f64 {
        (self.capacity / self.area_unit).sqrt()
    }

    /// `(side)² / capacity`, the overhead of the bounding square.
    pub fn square_ratio(&self) -> f64 {
        4.0 / self.area_unit
    }

    fn lp_radius(&self, t: f64) -> (f64, f64) {
        let p = self.exponent as f64;
        let (c, s) = (t.cos(), t.sin());
        let sum = c.powi(self.exponent) + s.powi(self.exponent);
        let dsum = p * (s.powi(self.exponent - 1) * c - c.powi(self.exponent - 1) * s);
        let r = sum.powf(-1.0 / p);
        (r, -r / (p * sum) * dsum)
    }

    /// `f(Θ) = πR(Θ)²/K_p`.
    pub fn density(&self, t: f64) -> f64 {
        let (r, _) = self.lp_radius(t);
        PI * r * r / self.area_unit
    }

    fn density_deriv(&self, t: f64) -> f64 {
        let (r, dr) = self.lp_radius(t);
        2.0 * PI * r * dr / self.area_unit
    }

    /// `T(Θ) = ∫₀^Θ f`, satisfying `T(Θ + π/2) = T(Θ) + π/2`.
    pub fn angle_map(&self, t: f64) -> f64 {
        let q = (t / FRAC_PI_2).floor();
        let rest = t - q * FRAC_PI_2;
        let h = FRAC_PI_2 / PANELS as f64;
        let k = ((rest / h) as usize).min(PANELS - 1);
        let start = k as f64 * h;
        q * FRAC_PI_2 + self.panel_table[k] + gauss_legendre(|s| self.density(s), start, rest)
    }

    /// `T⁻¹(θ)` by safeguarded Newton iteration.
    pub fn angle_inverse(&self, theta: f64) -> f64 {
        let q = (theta / FRAC_PI_2).floor();
        let target = theta - q * FRAC_PI_2;
        let (mut lo, mut hi) = (0.0, FRAC_PI_2);
        let mut t = target;
        for _ in 0..100 {
            let f = self.angle_map(t) - target;
            if f > 0.0 {
                hi = t;
            } else {
                lo = t;
            }
            let next = t - f / self.density(t);
            let next = if next > lo && next < hi { next } else { 0.5 * (lo + hi) };
            if (next - t).abs() < 1e-16 {
                t = next;
                break;
            }
            t = next;
        }
        q * FRAC_PI_2 + t
    }
}

impl SmoothMap for DiscToSquare {
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
        let r = p[0].hypot(p[1]);
        let big = self.angle_inverse(p[1].atan2(p[0]));
        let rho = r * self.density(big).sqrt();
        vec![rho * big.cos(), rho * big.sin()]
    }

    fn jacobian(&self, p: &[f64]) -> Option<DMatrix<f64>> {
        let (x, y) = (p[0], p[1]);
        let r = x.hypot(y);
        let big = self.angle_inverse(y.atan2(x));
        let f = self.density(big);
        let g = f.sqrt();
        let dg = self.density_deriv(big) / (2.0 * g);
        let dbig = 1.0 / f;
        let (c, s) = (big.cos(), big.sin());
        let d_r = [g * c, g * s];
        let d_theta = [r * dbig * (dg * c - g * s), r * dbig * (dg * s + g * c)];
        let (rx, ry) = (x / r, y / r);
        let (tx, ty) = (-y / (r * r), x / (r * r));
        Some(DMatrix::from_row_slice(
            2,
            2,
            &[
                d_r[0] * rx + d_theta[0] * tx,
                d_r[0] * ry + d_theta[0] * ty,
                d_r[1] * rx + d_theta[1] * tx,
                d_r[1] * ry + d_theta[1] * ty,
            ],
        ))
    }

    fn inverse(&self, q: &[f64]) -> Option<Vec<f64>> {
        let rho = q[0].hypot(q[1]);
        let big = q[1].atan2(q[0]);
        let r = rho / self.density(big).sqrt();
        if std::f64::consts::PI * r * r >= self.capacity {
            return None;
        }
        let theta = self.angle_map(big);
        Some(vec![r * theta.cos(), r * theta.sin()])
    }

    fn name(&self) -> String {
        "disc_to_square".into()
    }
}

//! Quintic smoothstep primitives and the bump functions built from them.
//!
//! Everything here is C² and has closed-form derivatives and antiderivatives,
//! so maps assembled from these pieces carry exact Jacobians.

use serde::{Deserialize, Serialize};

/// `6t⁵ − 15t⁴ + 10t³`, clamped to `[0, 1]` outside the unit interval.
pub fn smoothstep(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        t * t * t * (t * (6.0 * t - 15.0) + 10.0)
    }
}

pub fn smoothstep_deriv(t: f64) -> f64 {
    if t <= 0.0 || t >= 1.0 {
        0.0
    } else {
        30.0 * t * t * (t - 1.0) * (t - 1.0)
    }
}

/// `∫₀ᵗ smoothstep`, continued linearly past `t = 1`.
pub fn smoothstep_integral(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        0.5 + (t - 1.0)
    } else {
        t * t * t * t * (t * (t - 3.0) + 2.5)
    }
}

/// Rising edge from 0 at `x0` to 1 at `x1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ramp {
    pub x0: f64,
    pub x1: f64,
}

impl Ramp {
    pub fn new(x0: f64, x1: f64) -> Self {
        debug_assert!(x1 > x0);
        Self { x0, x1 }
    }

    fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn value(&self, x: f64) -> f64 {
        smoothstep((x - self.x0) / self.width())
    }

    pub fn deriv(&self, x: f64) -> f64 {
        smoothstep_deriv((x - self.x0) / self.width()) / self.width()
    }

    /// `∫_{x0}^{x} value`, zero for `x ≤ x0`.
    pub fn integral(&self, x: f64) -> f64 {
        self.width() * smoothstep_integral((x - self.x0) / self.width())
    }
}

/// Compactly supported plateau: `plateau` on `[plateau_lo, plateau_hi]`,
/// zero outside `[support_lo, support_hi]`, smoothstep shoulders between.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BumpFunction {
    pub plateau: f64,
    pub plateau_lo: f64,
    pub plateau_hi: f64,
    pub support_lo: f64,
    pub support_hi: f64,
}

impl BumpFunction {
    /// Order of smoothness of the shoulders (quintic smoothstep).
    pub const SMOOTHNESS: u8 = 2;

    pub fn new(plateau: f64, plateau_lo: f64, plateau_hi: f64, shoulder: f64) -> Self {
        Self {
            plateau,
            plateau_lo,
            plateau_hi,
            support_lo: plateau_lo - shoulder,
            support_hi: plateau_hi + shoulder,
        }
    }

    fn rise(&self) -> Ramp {
        Ramp::new(self.support_lo, self.plateau_lo)
    }

    fn fall(&self) -> Ramp {
        Ramp::new(self.plateau_hi, self.support_hi)
    }

    pub fn value(&self, x: f64) -> f64 {
        self.plateau * (self.rise().value(x) - self.fall().value(x))
    }

    pub fn deriv(&self, x: f64) -> f64 {
        self.plateau * (self.rise().deriv(x) - self.fall().deriv(x))
    }

    /// `∫_{-∞}^{x} value`.
    pub fn integral(&self, x: f64) -> f64 {
        self.plateau * (self.rise().integral(x) - self.fall().integral(x))
    }

    pub fn total_integral(&self) -> f64 {
        self.plateau * ((self.plateau_hi - self.plateau_lo) + 0.5 * (self.plateau_lo - self.support_lo) + 0.5 * (self.support_hi - self.plateau_hi))
    }
}

/// 1-periodic time reparametrization `h_μ`: equal to 1 except on a
/// μ-neighbourhood of each integer, and identically 0 within μ/2 of one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeriodicBump {
    pub mu: f64,
}

impl PeriodicBump {
    pub fn new(mu: f64) -> Self {
        debug_assert!(mu > 0.0 && mu < 0.25);
        Self { mu }
    }

    /// Half-width of the zero set around each integer.
    pub fn vanishing_radius(&self) -> f64 {
        0.5 * self.mu
    }

    fn rise(&self) -> Ramp {
        Ramp::new(0.5 * self.mu, self.mu)
    }

    fn fall(&self) -> Ramp {
        Ramp::new(1.0 - self.mu, 1.0 - 0.5 * self.mu)
    }

    pub fn value(&self, s: f64) -> f64 {
        let f = s - s.floor();
        self.rise().value(f) - self.fall().value(f)
    }

    pub fn deriv(&self, s: f64) -> f64 {
        let f = s - s.floor();
        self.rise().deriv(f) - self.fall().deriv(f)
    }

    /// `∫₀¹ h_μ = 1 − 3μ/2`.
    pub fn period_integral(&self) -> f64 {
        1.0 - 1.5 * self.mu
    }

    /// `I(s) = ∫₀ˢ h_μ`, valid for any real `s`.
    pub fn integral(&self, s: f64) -> f64 {
        let k = s.floor();
        let f = s - k;
        k * self.period_integral() + self.rise().integral(f) - self.fall().integral(f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        let mut acc = f(a) + f(b);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * f(a + i as f64 * h);
        }
        acc * h / 3.0
    }

    #[test]
    fn smoothstep_endpoints_and_integral() {
        assert_eq!(smoothstep(0.0), 0.0);
        assert_eq!(smoothstep(1.0), 1.0);
        assert!((smoothstep(0.5) - 0.5).abs() < 1e-15);
        let q = simpson(smoothstep, 0.0, 0.7, 2000);
        assert!((smoothstep_integral(0.7) - q).abs() < 1e-12);
    }

    #[test]
    fn periodic_bump_integral_matches_quadrature() {
        let h = PeriodicBump::new(0.1);
        for &s in &[0.03, 0.07, 0.5, 0.93, 0.97, 1.0, 1.42, 2.99] {
            let q = simpson(|t| h.value(t), 0.0, s, 20000);
            assert!((h.integral(s) - q).abs() < 1e-9, "s={s}: {} vs {q}", h.integral(s));
        }
        assert!((h.integral(1.0) - 0.85).abs() < 1e-14);
        assert_eq!(h.value(0.04), 0.0);
        assert_eq!(h.value(0.5), 1.0);
    }

    #[test]
    fn bump_function_plateau_and_support() {
        let b = BumpFunction::new(2.0, 0.0, 1.0, 0.25);
        assert_eq!(b.value(0.5), 2.0);
        assert_eq!(b.value(-0.3), 0.0);
        assert_eq!(b.value(1.3), 0.0);
        let q = simpson(|x| b.value(x), -0.5, 1.5, 4000);
        assert!((b.total_integral() - q).abs() < 1e-10);
        assert!((b.integral(2.0) - q).abs() < 1e-10);
        // monotone shoulders
        let mut prev = 0.0;
        for i in 0..=100 {
            let v = b.value(-0.25 + 0.0025 * i as f64);
            assert!(v >= prev - 1e-15);
            prev = v;
        }
    }
}

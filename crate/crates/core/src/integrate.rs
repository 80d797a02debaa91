//! ODE integrators: adaptive Dormand–Prince 5(4), fixed-step RK4 and
//! Störmer–Verlet for split Hamiltonians.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorSettings {
    pub tol: f64,
    pub max_step: f64,
    pub min_step: f64,
    pub max_steps: usize,
}

impl Default for IntegratorSettings {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_step: 0.05,
            min_step: 1e-12,
            max_steps: 2_000_000,
        }
    }
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

fn axpy(y: &[f64], h: f64, ks: &[Vec<f64>], coeffs: &[f64]) -> Vec<f64> {
    let mut out = y.to_vec();
    for (k, c) in ks.iter().zip(coeffs) {
        if *c != 0.0 {
            for (o, ki) in out.iter_mut().zip(k) {
                *o += h * c * ki;
            }
        }
    }
    out
}

/// Adaptive Dormand–Prince integration of `y' = f(t, y)` from `t0` to `t1`
/// (either direction). Each accepted step is passed to `record`.
pub fn dopri5_with<F, R>(f: F, t0: f64, t1: f64, y0: &[f64], settings: &IntegratorSettings, mut record: R) -> Result<Vec<f64>>
where
    F: Fn(f64, &[f64]) -> Result<Vec<f64>>,
    R: FnMut(f64, &[f64]),
{
    let mut y = y0.to_vec();
    record(t0, &y);
    if t0 == t1 {
        return Ok(y);
    }
    let dir = (t1 - t0).signum();
    let span = (t1 - t0).abs();
    let mut t = t0;
    let mut h = settings.max_step.min(span).min(0.01 * span.max(1e-3));
    let mut k1 = f(t, &y)?;
    for _ in 0..settings.max_steps {
        let remaining = (t1 - t) * dir;
        if remaining <= 0.0 {
            return Ok(y);
        }
        let last = h >= remaining;
        if last {
            h = remaining;
        }
        let hs = dir * h;
        let mut ks = vec![k1.clone()];
        for stage in 1..7 {
            let yi = axpy(&y, hs, &ks, &A[stage][..stage]);
            ks.push(f(t + C[stage] * hs, &yi)?);
        }
        let y5 = axpy(&y, hs, &ks, &B5);
        let y4 = axpy(&y, hs, &ks, &B4);
        let mut err: f64 = 0.0;
        for i in 0..y.len() {
            let scale = settings.tol * (1.0 + y[i].abs().max(y5[i].abs()));
            err = err.max((y5[i] - y4[i]).abs() / scale);
        }
        if !err.is_finite() || y5.iter().any(|v| !v.is_finite()) {
            return Err(Error::numeric(format!("integration blew up at t = {t}"), &y));
        }
        if err <= 1.0 {
            t = if last { t1 } else { t + hs };
            y = y5;
            k1 = ks.swap_remove(6);
            record(t, &y);
        }
        let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h = (h * factor).min(settings.max_step);
        if h < settings.min_step {
            return Err(Error::numeric(format!("step size underflow at t = {t}"), &y));
        }
    }
    Err(Error::numeric(format!("step budget exhausted at t = {t}"), &y))
}

pub fn dopri5<F>(f: F, t0: f64, t1: f64, y0: &[f64], settings: &IntegratorSettings) -> Result<Vec<f64>>
where
    F: Fn(f64, &[f64]) -> Result<Vec<f64>>,
{
    dopri5_with(f, t0, t1, y0, settings, |_, _| {})
}

/// Classical RK4 with `steps` equal steps; smooth in `y0`, which suits maps
/// that are differentiated numerically.
pub fn rk4<F>(f: F, t0: f64, t1: f64, y0: &[f64], steps: usize) -> Result<Vec<f64>>
where
    F: Fn(f64, &[f64]) -> Result<Vec<f64>>,
{
    let h = (t1 - t0) / steps as f64;
    let mut y = y0.to_vec();
    for k in 0..steps {
        let t = t0 + k as f64 * h;
        let k1 = f(t, &y)?;
        let k2 = f(t + 0.5 * h, &axpy(&y, 0.5 * h, std::slice::from_ref(&k1), &[1.0]))?;
        let k3 = f(t + 0.5 * h, &axpy(&y, 0.5 * h, std::slice::from_ref(&k2), &[1.0]))?;
        let k4 = f(t + h, &axpy(&y, h, std::slice::from_ref(&k3), &[1.0]))?;
        y = axpy(&y, h, &[k1, k2, k3, k4], &[1.0 / 6.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 6.0]);
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::numeric("RK4 produced non-finite state", &y));
    }
    Ok(y)
}

/// Störmer–Verlet for `H = K(y, s) + V(x, s)` on interleaved coordinates
/// `(x₁, y₁, …)`: `dv` is `∂V/∂x` and `dk` is `∂K/∂y`, each on half vectors.
pub fn verlet<DV, DK>(dv: DV, dk: DK, t0: f64, t1: f64, z0: &[f64], steps: usize) -> Vec<f64>
where
    DV: Fn(&[f64], f64) -> Vec<f64>,
    DK: Fn(&[f64], f64) -> Vec<f64>,
{
    let n = z0.len() / 2;
    let mut x: Vec<f64> = (0..n).map(|i| z0[2 * i]).collect();
    let mut y: Vec<f64> = (0..n).map(|i| z0[2 * i + 1]).collect();
    let h = (t1 - t0) / steps as f64;
    for k in 0..steps {
        let t = t0 + k as f64 * h;
        let g = dv(&x, t);
        for i in 0..n {
            y[i] -= 0.5 * h * g[i];
        }
        let g = dk(&y, t + 0.5 * h);
        for i in 0..n {
            x[i] += h * g[i];
        }
        let g = dv(&x, t + h);
        for i in 0..n {
            y[i] -= 0.5 * h * g[i];
        }
    }
    (0..2 * n).map(|i| if i % 2 == 0 { x[i / 2] } else { y[i / 2] }).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn oscillator(_: f64, z: &[f64]) -> Result<Vec<f64>> {
        Ok(vec![z[1], -z[0]])
    }

    #[test]
    fn dopri_full_rotation() {
        let z = dopri5(oscillator, 0.0, 2.0 * PI, &[1.0, 0.5], &IntegratorSettings::default()).unwrap();
        assert!((z[0] - 1.0).abs() < 1e-7 && (z[1] - 0.5).abs() < 1e-7);
        let back = dopri5(oscillator, 2.0 * PI, 0.0, &z, &IntegratorSettings::default()).unwrap();
        assert!((back[0] - 1.0).abs() < 1e-8);
    }

    #[test]
    fn dopri_time_dependent() {
        let z = dopri5(|t, _| Ok(vec![t.cos()]), 0.0, 2.0, &[0.0], &IntegratorSettings::default()).unwrap();
        assert!((z[0] - 2f64.sin()).abs() < 1e-9);
    }

    #[test]
    fn rk4_and_verlet_agree_with_exact() {
        let z = rk4(oscillator, 0.0, 1.0, &[1.0, 0.0], 400).unwrap();
        assert!((z[0] - 1f64.cos()).abs() < 1e-10 && (z[1] + 1f64.sin()).abs() < 1e-10);
        let v = verlet(|x, _| x.to_vec(), |y, _| y.to_vec(), 0.0, 1.0, &[1.0, 0.0], 20_000);
        assert!((v[0] - 1f64.cos()).abs() < 1e-8 && (v[1] + 1f64.sin()).abs() < 1e-8);
    }

    #[test]
    fn underflow_reports_state() {
        let settings = IntegratorSettings { min_step: 1e-3, ..Default::default() };
        let err = dopri5(|_, y| Ok(vec![y[0] * y[0]]), 0.0, 2.0, &[1.0], &settings).unwrap_err();
        assert!(matches!(err, Error::Numeric { .. }));
    }
}

//! Time-dependent Hamiltonians `H(x, s)` on ℝ²ᵐ, their symplectic gradients
//! and grid energy estimates.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::expr::Expr;
use crate::smooth::{BumpFunction, PeriodicBump, Ramp};

/// A scalar field `H(x, s)`.
pub trait Field: Send + Sync {
    fn dim(&self) -> usize;

    fn value(&self, x: &[f64], s: f64) -> f64;

    fn gradient(&self, x: &[f64], s: f64) -> Vec<f64> {
        fd_gradient(|y| self.value(y, s), x)
    }

    /// Closed-form time-`s0 → s1` flow, when known.
    fn exact_flow(&self, _x: &[f64], _s0: f64, _s1: f64) -> Option<Vec<f64>> {
        None
    }

    /// Closed-form flow of `c·H`, when known.
    fn scaled_flow(&self, _x: &[f64], _s0: f64, _s1: f64, _c: f64) -> Option<Vec<f64>> {
        None
    }

    /// Exact `(inf, sup)` over all `(x, s)`, when known.
    fn range(&self) -> Option<(f64, f64)> {
        None
    }

    fn describe(&self) -> String;
}

pub type SharedField = Arc<dyn Field>;

/// Fourth-order central-difference gradient.
pub fn fd_gradient(f: impl Fn(&[f64]) -> f64, x: &[f64]) -> Vec<f64> {
    let mut q = x.to_vec();
    (0..x.len())
        .map(|i| {
            let h = 1e-4 * (1.0 + x[i].abs());
            let mut at = |d: f64| {
                q[i] = x[i] + d;
                let v = f(&q);
                q[i] = x[i];
                v
            };
            let (p1, m1, p2, m2) = (at(h), at(-h), at(0.5 * h), at(-0.5 * h));
            (8.0 * (p2 - m2) - (p1 - m1)) / (6.0 * h)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct HamiltonianFlags {
    /// `H(x, s + 1) = H(x, s)`.
    pub periodic: bool,
    /// `H(x, s) = 0` whenever `dist(s, ℤ)` is below this radius.
    pub vanishing_radius: Option<f64>,
    /// `min_x H(x, s) = 0` for every `s`.
    pub normalized: bool,
}

/// `H` together with a compact box carrying its `x`-support (or, for
/// translation-invariant fields, the region where it is sampled) and flags.
#[derive(Clone)]
pub struct TimeDepHamiltonian {
    pub field: SharedField,
    pub support_lo: Vec<f64>,
    pub support_hi: Vec<f64>,
    pub flags: HamiltonianFlags,
}

impl std::fmt::Debug for TimeDepHamiltonian {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TimeDepHamiltonian")
            .field("field", &self.field.describe())
            .field("support_lo", &self.support_lo)
            .field("support_hi", &self.support_hi)
            .field("flags", &self.flags)
            .finish()
    }
}

impl TimeDepHamiltonian {
    pub fn new(field: SharedField, support_lo: Vec<f64>, support_hi: Vec<f64>, flags: HamiltonianFlags) -> Result<Self> {
        check_dim(field.dim(), support_lo.len())?;
        check_dim(field.dim(), support_hi.len())?;
        if !field.dim().is_multiple_of(2) {
            return Err(Error::input("phase space must be even-dimensional"));
        }
        if support_lo.iter().zip(&support_hi).any(|(a, b)| !(a < b)) {
            return Err(Error::input("support box must have positive extent"));
        }
        Ok(Self {
            field,
            support_lo,
            support_hi,
            flags,
        })
    }

    pub fn zero(dim: usize) -> Self {
        Self {
            field: Arc::new(ZeroField { dim }),
            support_lo: vec![-1.0; dim],
            support_hi: vec![1.0; dim],
            flags: HamiltonianFlags {
                periodic: true,
                vanishing_radius: Some(0.5),
                normalized: true,
            },
        }
    }

    pub fn dim(&self) -> usize {
        self.field.dim()
    }

    pub fn value(&self, x: &[f64], s: f64) -> f64 {
        self.field.value(x, s)
    }

    pub fn symplectic_gradient(&self, x: &[f64], s: f64) -> Result<Vec<f64>> {
        symplectic_gradient(self, x, s)
    }

    /// `H̄(x, t) = −H(x, 1 − t)`, generating the reversed isotopy.
    pub fn reversed(&self) -> Self {
        Self {
            field: Arc::new(TimeReparam::new(self.field.clone(), -1.0, 1.0)),
            flags: HamiltonianFlags {
                normalized: false,
                ..self.flags
            },
            ..self.clone()
        }
    }

    /// `a·H(x, a·s + b)`, generating `s ↦ φ_{as+b} ∘ φ_b⁻¹`.
    pub fn reparametrized(&self, a: f64, b: f64) -> Self {
        Self {
            field: Arc::new(TimeReparam::new(self.field.clone(), a, b)),
            flags: HamiltonianFlags {
                periodic: false,
                vanishing_radius: None,
                normalized: self.flags.normalized && a >= 0.0,
            },
            ..self.clone()
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            field: Arc::new(Scaled { inner: self.field.clone(), factor: c }),
            flags: HamiltonianFlags {
                normalized: self.flags.normalized && c >= 0.0,
                ..self.flags
            },
            ..self.clone()
        }
    }

    /// Largest `|H|` on `dist(s, ℤ) < radius` and smallest `min_x H_s` minus
    /// zero, over the given samples and times.
    pub fn check_flags(&self, xs: &[Vec<f64>], times: &[f64]) -> FlagReport {
        let mut report = FlagReport::default();
        if let Some(r) = self.flags.vanishing_radius {
            for &s in times {
                let d = (s - s.round()).abs();
                if d < r {
                    for x in xs {
                        report.vanishing_violation = report.vanishing_violation.max(self.value(x, s).abs());
                    }
                }
            }
        }
        if self.flags.normalized {
            for &s in times {
                let m = xs.iter().map(|x| self.value(x, s)).fold(f64::INFINITY, f64::min);
                report.normalization_violation = report.normalization_violation.max(m.abs());
            }
        }
        if self.flags.periodic {
            for &s in times {
                for x in xs {
                    let d = (self.value(x, s) - self.value(x, s + 1.0)).abs();
                    report.periodicity_violation = report.periodicity_violation.max(d);
                }
            }
        }
        report
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FlagReport {
    pub vanishing_violation: f64,
    pub normalization_violation: f64,
    pub periodicity_violation: f64,
}

impl FlagReport {
    pub fn max(&self) -> f64 {
        self.vanishing_violation
            .max(self.normalization_violation)
            .max(self.periodicity_violation)
    }
}

/// `X_H` with `ι_{X_H} ω₀ = dH_s`: `(∂H/∂y, −∂H/∂x)` on each pair.
pub fn symplectic_gradient(h: &TimeDepHamiltonian, x: &[f64], s: f64) -> Result<Vec<f64>> {
    check_dim(h.dim(), x.len())?;
    let g = h.field.gradient(x, s);
    let mut out = vec![0.0; x.len()];
    for i in 0..x.len() / 2 {
        out[2 * i] = g[2 * i + 1];
        out[2 * i + 1] = -g[2 * i];
    }
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::numeric("non-finite Hamiltonian gradient", x));
    }
    Ok(out)
}

pub struct ZeroField {
    pub dim: usize,
}

impl Field for ZeroField {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, _x: &[f64], _s: f64) -> f64 {
        0.0
    }

    fn gradient(&self, x: &[f64], _s: f64) -> Vec<f64> {
        vec![0.0; x.len()]
    }

    fn exact_flow(&self, x: &[f64], _s0: f64, _s1: f64) -> Option<Vec<f64>> {
        Some(x.to_vec())
    }

    fn scaled_flow(&self, x: &[f64], _s0: f64, _s1: f64, _c: f64) -> Option<Vec<f64>> {
        Some(x.to_vec())
    }

    fn range(&self) -> Option<(f64, f64)> {
        Some((0.0, 0.0))
    }

    fn describe(&self) -> String {
        "0".into()
    }
}

pub struct ExprField {
    pub expr: Expr,
}

impl Field for ExprField {
    fn dim(&self) -> usize {
        self.expr.dim()
    }

    fn value(&self, x: &[f64], s: f64) -> f64 {
        self.expr.eval(x, s)
    }

    fn describe(&self) -> String {
        self.expr.source().to_string()
    }
}

type ValueFn = Arc<dyn Fn(&[f64], f64) -> f64 + Send + Sync>;
type GradFn = Arc<dyn Fn(&[f64], f64) -> Vec<f64> + Send + Sync>;

/// Field from closures.
#[derive(Clone)]
pub struct FnField {
    pub dim: usize,
    pub name: String,
    value: ValueFn,
    grad: Option<GradFn>,
}

impl FnField {
    pub fn new(dim: usize, name: impl Into<String>, value: impl Fn(&[f64], f64) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            dim,
            name: name.into(),
            value: Arc::new(value),
            grad: None,
        }
    }

    pub fn with_gradient(mut self, g: impl Fn(&[f64], f64) -> Vec<f64> + Send + Sync + 'static) -> Self {
        self.grad = Some(Arc::new(g));
        self
    }
}

impl Field for FnField {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64], s: f64) -> f64 {
        (self.value)(x, s)
    }

    fn gradient(&self, x: &[f64], s: f64) -> Vec<f64> {
        match &self.grad {
            Some(g) => g(x, s),
            None => fd_gradient(|y| (self.value)(y, s), x),
        }
    }

    fn describe(&self) -> String {
        self.name.clone()
    }
}

/// `a·H(x, a·s + b)`.
pub struct TimeReparam {
    pub inner: SharedField,
    pub a: f64,
    pub b: f64,
}

impl TimeReparam {
    pub fn new(inner: SharedField, a: f64, b: f64) -> Self {
        Self { inner, a, b }
    }
}

impl Field for TimeReparam {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn value(&self, x: &[f64], s: f64) -> f64 {
        self.a * self.inner.value(x, self.a * s + self.b)
    }

    fn gradient(&self, x: &[f64], s: f64) -> Vec<f64> {
        self.inner
            .gradient(x, self.a * s + self.b)
            .into_iter()
            .map(|g| self.a * g)
            .collect()
    }

    fn exact_flow(&self, x: &[f64], s0: f64, s1: f64) -> Option<Vec<f64>> {
        self.inner.exact_flow(x, self.a * s0 + self.b, self.a * s1 + self.b)
    }

    fn range(&self) -> Option<(f64, f64)> {
        let (lo, hi) = self.inner.range()?;
        let (p, q) = (self.a * lo, self.a * hi);
        Some((p.min(q), p.max(q)))
    }

    fn describe(&self) -> String {
        format!("{}·H(x, {}·s + {}) with H = {}", self.a, self.a, self.b, self.inner.describe())
    }
}

pub struct Scaled {
    pub inner: SharedField,
    pub factor: f64,
}

impl Field for Scaled {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn value(&self, x: &[f64], s: f64) -> f64 {
        self.factor * self.inner.value(x, s)
    }

    fn gradient(&self, x: &[f64], s: f64) -> Vec<f64> {
        self.inner.gradient(x, s).into_iter().map(|g| self.factor * g).collect()
    }

    fn exact_flow(&self, x: &[f64], s0: f64, s1: f64) -> Option<Vec<f64>> {
        self.inner.scaled_flow(x, s0, s1, self.factor)
    }

    fn scaled_flow(&self, x: &[f64], s0: f64, s1: f64, c: f64) -> Option<Vec<f64>> {
        self.inner.scaled_flow(x, s0, s1, c * self.factor)
    }

    fn range(&self) -> Option<(f64, f64)> {
        let (lo, hi) = self.inner.range()?;
        let (p, q) = (self.factor * lo, self.factor * hi);
        Some((p.min(q), p.max(q)))
    }

    fn describe(&self) -> String {
        format!("{}·({})", self.factor, self.inner.describe())
    }
}

/// Fields on complementary coordinate blocks, summed: the generator of the
/// product isotopy.
pub struct FactorSum {
    pub parts: Vec<SharedField>,
}

impl FactorSum {
    fn blocks<'a>(&self, x: &'a [f64]) -> Vec<&'a [f64]> {
        let mut off = 0;
        self.parts
            .iter()
            .map(|p| {
                let b = &x[off..off + p.dim()];
                off += p.dim();
                b
            })
            .collect()
    }
}

impl Field for FactorSum {
    fn dim(&self) -> usize {
        self.parts.iter().map(|p| p.dim()).sum()
    }

    fn value(&self, x: &[f64], s: f64) -> f64 {
        self.parts.iter().zip(self.blocks(x)).map(|(p, b)| p.value(b, s)).sum()
    }

    fn gradient(&self, x: &[f64], s: f64) -> Vec<f64> {
        self.parts
            .iter()
            .zip(self.blocks(x))
            .flat_map(|(p, b)| p.gradient(b, s))
            .collect()
    }

    fn exact_flow(&self, x: &[f64], s0: f64, s1: f64) -> Option<Vec<f64>> {
        let mut out = Vec::with_capacity(x.len());
        for (p, b) in self.parts.iter().zip(self.blocks(x)) {
            out.extend(p.exact_flow(b, s0, s1)?);
        }
        Some(out)
    }

    fn scaled_flow(&self, x: &[f64], s0: f64, s1: f64, c: f64) -> Option<Vec<f64>> {
        let mut out = Vec::with_capacity(x.len());
        for (p, b) in self.parts.iter().zip(self.blocks(x)) {
            out.extend(p.scaled_flow(b, s0, s1, c)?);
        }
        Some(out)
    }

    fn range(&self) -> Option<(f64, f64)> {
        let mut acc = (0.0, 0.0);
        for p in &self.parts {
            let (lo, hi) = p.range()?;
            acc = (acc.0 + lo, acc.1 + hi);
        }
        Some(acc)
    }

    fn describe(&self) -> String {
        self.parts.iter().map(|p| p.describe()).collect::<Vec<_>>().join(" ⊕ ")
    }
}

/// Translation of the strip `ℝ × [v_lo, v_hi]` in the `u`-direction of one
/// coordinate pair: `H = ν·h(s)·P(v)`, where `P' = 1` on `[v_lo, v_hi]`,
/// `P = 0` below `v_lo − w`, `P` peaks at `h + w` on `[v_hi + w, v_hi + 3w/2]`
/// and returns to 0 by `v_hi + 5w/2`. The time factor `h` is `h_μ` or 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StripTranslation {
    pub dim: usize,
    pub pair: usize,
    pub nu: f64,
    pub v_lo: f64,
    pub v_hi: f64,
    pub shoulder: f64,
    pub mu: Option<f64>,
}

impl StripTranslation {
    pub fn new(dim: usize, pair: usize, nu: f64, v_lo: f64, v_hi: f64, shoulder: f64, mu: Option<f64>) -> Result<Self> {
        if !dim.is_multiple_of(2) || 2 * pair + 2 > dim {
            return Err(Error::input(format!("pair {pair} not in dimension {dim}")));
        }
        if !(v_lo < v_hi) || !(shoulder > 0.0) {
            return Err(Error::input("strip translation needs v_lo < v_hi and a positive shoulder"));
        }
        if let Some(m) = mu {
            if !(m > 0.0 && m < 0.25) {
                return Err(Error::input(format!("μ must lie in (0, 1/4), got {m}")));
            }
        }
        Ok(Self {
            dim,
            pair,
            nu,
            v_lo,
            v_hi,
            shoulder,
            mu,
        })
    }

    fn slope(&self) -> BumpFunction {
        BumpFunction::new(1.0, self.v_lo, self.v_hi, self.shoulder)
    }

    fn cutoff(&self) -> Ramp {
        Ramp::new(self.v_hi + 1.5 * self.shoulder, self.v_hi + 2.5 * self.shoulder)
    }

    /// `max P = (v_hi − v_lo) + w`.
    pub fn profile_max(&self) -> f64 {
        self.v_hi - self.v_lo + self.shoulder
    }

    pub fn profile(&self, v: f64) -> f64 {
        self.slope().integral(v) * (1.0 - self.cutoff().value(v))
    }

    pub fn profile_deriv(&self, v: f64) -> f64 {
        let (l, d) = (self.slope(), self.cutoff());
        l.value(v) * (1.0 - d.value(v)) - l.integral(v) * d.deriv(v)
    }

    /// Upper end of the support in `v`.
    pub fn v_top(&self) -> f64 {
        self.v_hi + 2.5 * self.shoulder
    }

    /// Middle of the plateau of `P`, where `P = max P`.
    pub fn v_peak(&self) -> f64 {
        self.v_hi + 1.25 * self.shoulder
    }

    /// Lower end of the support in `v`.
    pub fn v_bottom(&self) -> f64 {
        self.v_lo - self.shoulder
    }

    pub fn time_factor(&self, s: f64) -> f64 {
        match self.mu {
            Some(m) => PeriodicBump::new(m).value(s),
            None => 1.0,
        }
    }

    pub fn time_integral(&self, s: f64) -> f64 {
        match self.mu {
            Some(m) => PeriodicBump::new(m).integral(s),
            None => s,
        }
    }

    /// `ν·max P`.
    pub fn energy(&self) -> f64 {
        self.nu.abs() * self.profile_max()
    }

    /// `u`-displacement of the strip core over `[s0, s1]`.
    pub fn displacement(&self, s0: f64, s1: f64) -> f64 {
        self.nu * (self.time_integral(s1) - self.time_integral(s0))
    }
}

impl Field for StripTranslation {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64], s: f64) -> f64 {
        self.nu * self.time_factor(s) * self.profile(x[2 * self.pair + 1])
    }

    fn gradient(&self, x: &[f64], s: f64) -> Vec<f64> {
        let mut g = vec![0.0; x.len()];
        g[2 * self.pair + 1] = self.nu * self.time_factor(s) * self.profile_deriv(x[2 * self.pair + 1]);
        g
    }

    fn exact_flow(&self, x: &[f64], s0: f64, s1: f64) -> Option<Vec<f64>> {
        self.scaled_flow(x, s0, s1, 1.0)
    }

    fn scaled_flow(&self, x: &[f64], s0: f64, s1: f64, c: f64) -> Option<Vec<f64>> {
        let mut y = x.to_vec();
        let v = x[2 * self.pair + 1];
        y[2 * self.pair] += c * self.profile_deriv(v) * self.displacement(s0, s1);
        Some(y)
    }

    fn range(&self) -> Option<(f64, f64)> {
        let e = self.nu * self.profile_max();
        Some((e.min(0.0), e.max(0.0)))
    }

    fn describe(&self) -> String {
        format!(
            "strip translation ν = {} on v ∈ [{}, {}], shoulder {}, μ = {:?}",
            self.nu, self.v_lo, self.v_hi, self.shoulder, self.mu
        )
    }
}

/// Random compactly supported `H = h_μ(s) Σ a_k (1 − |x − c_k|²/r_k²)⁴ (1 + b_k sin 2πs)`
/// with `μ = 0.1`, so that `H` vanishes near integer times; used as an oracle family.
pub fn random_bump_hamiltonian(dim: usize, count: usize, seed: u64) -> TimeDepHamiltonian {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let terms: Vec<(Vec<f64>, f64, f64, f64)> = (0..count)
        .map(|_| {
            let c: Vec<f64> = (0..dim).map(|_| rng.gen_range(-0.5..0.5)).collect();
            (c, rng.gen_range(0.6..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-0.5..0.5))
        })
        .collect();
    let terms = Arc::new(terms);
    let (t1, t2) = (terms.clone(), terms);
    let time = PeriodicBump::new(0.1);
    let value = move |x: &[f64], s: f64| {
        let sum: f64 = t1
            .iter()
            .map(|(c, r, a, b)| {
                let q = 1.0 - x.iter().zip(c).map(|(xi, ci)| (xi - ci) * (xi - ci)).sum::<f64>() / (r * r);
                if q <= 0.0 {
                    0.0
                } else {
                    a * q.powi(4) * (1.0 + b * (2.0 * std::f64::consts::PI * s).sin())
                }
            })
            .sum();
        time.value(s) * sum
    };
    let grad = move |x: &[f64], s: f64| {
        let mut g = vec![0.0; x.len()];
        for (c, r, a, b) in t2.iter() {
            let q = 1.0 - x.iter().zip(c).map(|(xi, ci)| (xi - ci) * (xi - ci)).sum::<f64>() / (r * r);
            if q > 0.0 {
                let k = time.value(s) * a * 4.0 * q.powi(3) * (1.0 + b * (2.0 * std::f64::consts::PI * s).sin()) * (-2.0 / (r * r));
                for i in 0..x.len() {
                    g[i] += k * (x[i] - c[i]);
                }
            }
        }
        g
    };
    let field = FnField::new(dim, format!("random bumps (seed {seed})"), value).with_gradient(grad);
    TimeDepHamiltonian {
        field: Arc::new(field),
        support_lo: vec![-1.5; dim],
        support_hi: vec![1.5; dim],
        flags: HamiltonianFlags {
            periodic: true,
            vanishing_radius: Some(0.05),
            normalized: false,
        },
    }
}

/// Grid resolution for energy estimates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyGrid {
    pub per_axis: usize,
    pub time_points: usize,
}

impl Default for EnergyGrid {
    fn default() -> Self {
        Self {
            per_axis: 41,
            time_points: 101,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyEstimate {
    pub value: f64,
    pub sup: f64,
    pub inf: f64,
    pub grid: EnergyGrid,
    /// Exact oscillation when the field knows its range.
    pub analytic: Option<f64>,
}

impl EnergyEstimate {
    /// The exact value when known, the grid value otherwise.
    pub fn certified(&self) -> f64 {
        self.analytic.unwrap_or(self.value)
    }
}

fn grid_points(lo: &[f64], hi: &[f64], k: usize) -> Vec<Vec<f64>> {
    let d = lo.len();
    let total = k.pow(d as u32);
    (0..total)
        .map(|mut idx| {
            (0..d)
                .map(|i| {
                    let j = idx % k;
                    idx /= k;
                    lo[i] + (hi[i] - lo[i]) * j as f64 / (k - 1).max(1) as f64
                })
                .collect()
        })
        .collect()
}

fn time_grid(n: usize) -> Vec<f64> {
    (0..n).map(|j| j as f64 / (n - 1).max(1) as f64).collect()
}

/// Per-time `(inf_x, sup_x)` of `H_s` on the grid.
fn slice_ranges(h: &TimeDepHamiltonian, grid: &EnergyGrid) -> Vec<(f64, f64)> {
    let pts = grid_points(&h.support_lo, &h.support_hi, grid.per_axis);
    time_grid(grid.time_points)
        .into_par_iter()
        .map(|s| {
            pts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| {
                let v = h.value(x, s);
                (lo.min(v), hi.max(v))
            })
        })
        .collect()
}

/// `sup_{x,s} H − inf_{x,s} H` on the grid: an upper-bound certificate for
/// the Hofer norm of the time-1 map.
pub fn hofer_energy_upper(h: &TimeDepHamiltonian, grid: &EnergyGrid) -> EnergyEstimate {
    let ranges = slice_ranges(h, grid);
    let inf = ranges.iter().map(|r| r.0).fold(f64::INFINITY, f64::min);
    let sup = ranges.iter().map(|r| r.1).fold(f64::NEG_INFINITY, f64::max);
    EnergyEstimate {
        value: sup - inf,
        sup,
        inf,
        grid: *grid,
        analytic: h.field.range().map(|(lo, hi)| hi - lo),
    }
}

/// `max_s (sup_x H_s − inf_x H_s)` on the grid.
pub fn diffeotopy_energy(h: &TimeDepHamiltonian, grid: &EnergyGrid) -> EnergyEstimate {
    let ranges = slice_ranges(h, grid);
    let (mut best, mut at) = (f64::NEG_INFINITY, (0.0, 0.0));
    for r in &ranges {
        if r.1 - r.0 > best {
            best = r.1 - r.0;
            at = *r;
        }
    }
    EnergyEstimate {
        value: best,
        sup: at.1,
        inf: at.0,
        grid: *grid,
        analytic: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn planar(field: impl Field + 'static) -> TimeDepHamiltonian {
        TimeDepHamiltonian::new(Arc::new(field), vec![-1.0, -1.0], vec![1.0, 1.0], HamiltonianFlags::default()).unwrap()
    }

    #[test]
    fn gradient_sign_convention() {
        let h = planar(ExprField { expr: Expr::parse("x", 2).unwrap() });
        let x = symplectic_gradient(&h, &[0.3, 0.4], 0.0).unwrap();
        assert!((x[0]).abs() < 1e-12 && (x[1] + 1.0).abs() < 1e-12);
        let h = planar(ExprField { expr: Expr::parse("0.5*(x^2+y^2)", 2).unwrap() });
        let x = symplectic_gradient(&h, &[0.3, 0.4], 0.0).unwrap();
        assert!((x[0] - 0.4).abs() < 1e-10 && (x[1] + 0.3).abs() < 1e-10);
        let h = planar(ExprField { expr: Expr::parse("2.5*v", 2).unwrap() });
        let x = symplectic_gradient(&h, &[0.3, 0.4], 0.0).unwrap();
        assert!((x[0] - 2.5).abs() < 1e-10 && x[1].abs() < 1e-12);
    }

    #[test]
    fn strip_profile_shape() {
        let st = StripTranslation::new(2, 0, 2.0, 0.0, 1.0, 0.05, Some(0.1)).unwrap();
        assert!((st.profile_deriv(0.5) - 1.0).abs() < 1e-15);
        assert_eq!(st.profile(-0.06), 0.0);
        assert!((st.profile(1.06) - 1.05).abs() < 1e-12);
        assert_eq!(st.profile(1.2), 0.0);
        assert!((st.energy() - 2.1).abs() < 1e-12);
        let g = fd_gradient(|x| st.value(x, 0.3), &[0.0, 1.11]);
        assert!((g[1] - st.gradient(&[0.0, 1.11], 0.3)[1]).abs() < 1e-6);
    }

    #[test]
    fn energies() {
        let zero = TimeDepHamiltonian::zero(2);
        assert_eq!(hofer_energy_upper(&zero, &EnergyGrid::default()).value, 0.0);
        let sx = planar(ExprField { expr: Expr::parse("s*x", 2).unwrap() });
        let d = diffeotopy_energy(&sx, &EnergyGrid::default());
        assert!((d.value - 2.0).abs() < 1e-12);
        let auto = planar(ExprField { expr: Expr::parse("x*y", 2).unwrap() });
        let grid = EnergyGrid::default();
        assert!((hofer_energy_upper(&auto, &grid).value - diffeotopy_energy(&auto, &grid).value).abs() < 1e-12);
        // h(s)·H₀(x) → (sup H₀ − inf H₀)·max h with H₀ = x, h = sin²(πs).
        let prod = planar(ExprField { expr: Expr::parse("sin(pi*s)^2 * x", 2).unwrap() });
        assert!((hofer_energy_upper(&prod, &grid).value - 2.0).abs() < 1e-12);
        let twice = prod.scaled(2.0);
        assert!((hofer_energy_upper(&twice, &grid).value - 4.0).abs() < 1e-12);
    }

    #[test]
    fn flags() {
        let st = StripTranslation::new(2, 0, 1.0, 0.0, 1.0, 0.05, Some(0.1)).unwrap();
        let h = TimeDepHamiltonian::new(
            Arc::new(st),
            vec![-1.0, -0.5],
            vec![1.0, 1.5],
            HamiltonianFlags {
                periodic: true,
                vanishing_radius: Some(0.05),
                normalized: true,
            },
        )
        .unwrap();
        let xs: Vec<Vec<f64>> = (0..50).map(|k| vec![0.0, -0.5 + 2.0 * k as f64 / 49.0]).collect();
        let ts: Vec<f64> = (0..200).map(|k| -0.5 + 2.0 * k as f64 / 199.0).collect();
        assert!(h.check_flags(&xs, &ts).max() < 1e-12);
    }
}

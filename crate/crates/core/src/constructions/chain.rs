//! The map `G` spreading a ball along a chain of rectangles by an isotopy,
//! and the unwrapped ball built from it.
//!
//! On the `i`-th rectangle `G(p, u, v) = (φ_{i−1}(g(p)), u, v)`; along the
//! segment after it the isotopy runs once more,
//! `G(p, u, v) = (q, u, v − τ'(u)·H(q, τ(u)))` with `q = φ_{τ(u)}(φ_{i−1}(g(p)))`
//! and `τ(u) = (u − b_i)/ℓ` the local time on a segment of length `ℓ`.

use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::ball::EmbeddedBall;
use crate::error::{check_dim, Error, Result};
use crate::hamiltonian::{symplectic_gradient, TimeDepHamiltonian};
use crate::isotopy::{Generator, Isotopy};
use crate::map::{default_step, fd_jacobian, fd_jacobian_fn, identity, Compose, ProductMap, SharedMap, SmoothMap};
use crate::profile::{DiscToSkeleton, DEFAULT_SHRINK_FRACTION};
use crate::region::{ProductRegion, SharedRegion};
use crate::skeleton::{build_yn, PlanarSkeleton};

/// Where the segments of a chain start and how long they are.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainSchedule {
    pub starts: Vec<f64>,
    pub length: f64,
}

impl ChainSchedule {
    pub fn new(starts: Vec<f64>, length: f64) -> Result<Self> {
        if !(length > 0.0) {
            return Err(Error::input(format!("segment length must be positive, got {length}")));
        }
        if starts.windows(2).any(|w| w[1] < w[0] + length) {
            return Err(Error::input("segments overlap or are out of order"));
        }
        Ok(Self { starts, length })
    }

    /// Segments of a skeleton, in chain order.
    pub fn for_skeleton(skel: &PlanarSkeleton) -> Result<Self> {
        let segs: Vec<_> = skel.segments().collect();
        let length = segs.first().map(|s| s.length()).unwrap_or(1.0);
        if segs.iter().any(|s| (s.length() - length).abs() > 1e-12 * length) {
            return Err(Error::input("chain segments must share one length"));
        }
        Self::new(segs.iter().map(|s| s.start[0]).collect(), length)
    }

    /// `(k, τ, dτ/du)`: completed segments, local time and its rate.
    pub fn at(&self, u: f64) -> (usize, f64, f64) {
        for (k, &b) in self.starts.iter().enumerate() {
            if u <= b {
                return (k, 0.0, 0.0);
            }
            if u < b + self.length {
                return (k, (u - b) / self.length, 1.0 / self.length);
            }
        }
        (self.starts.len(), 0.0, 0.0)
    }
}

/// `G: V_dom × N(Y) → V × ℝ²`.
#[derive(Clone)]
pub struct ChainMap {
    pub seed: SharedMap,
    pub isotopy: Isotopy,
    pub schedule: ChainSchedule,
    hamiltonian: TimeDepHamiltonian,
    domain: SharedRegion,
}

impl ChainMap {
    pub fn new(seed: SharedMap, isotopy: Isotopy, schedule: ChainSchedule, base: SharedRegion) -> Result<Self> {
        check_dim(seed.dim_out(), isotopy.dim())?;
        check_dim(2, base.dim())?;
        let hamiltonian = isotopy
            .hamiltonian_ref()
            .cloned()
            .unwrap_or_else(|| TimeDepHamiltonian::zero(isotopy.dim()));
        let domain = Arc::new(ProductRegion::new(vec![seed.domain(), base]));
        Ok(Self {
            seed,
            isotopy,
            schedule,
            hamiltonian,
            domain,
        })
    }

    fn v_dim(&self) -> usize {
        self.seed.dim_out()
    }

    /// `φ_τ(φ₁ᵏ(q0))`.
    pub fn fiber_point(&self, q0: &[f64], k: usize, tau: f64) -> Result<Vec<f64>> {
        let q = self.isotopy.iterate(q0, 1.0, k)?;
        if tau > 0.0 {
            self.isotopy.flow(&q, 0.0, tau)
        } else {
            Ok(q)
        }
    }

    /// The Hamiltonian whose values shift `v` along the segments.
    pub fn hamiltonian(&self) -> &TimeDepHamiltonian {
        &self.hamiltonian
    }

    fn time_velocity(&self, q1: &[f64], q: &[f64], tau: f64) -> Result<Vec<f64>> {
        match self.isotopy.generator {
            Generator::Hamiltonian(ref h) => symplectic_gradient(h, q, tau),
            Generator::Explicit(_) => {
                let h = 1e-6;
                let (a, b) = if tau < 2.0 * h { (tau, tau + 2.0 * h) } else { (tau - h, tau + h) };
                let qa = self.isotopy.flow(q1, 0.0, a)?;
                let qb = self.isotopy.flow(q1, 0.0, b)?;
                Ok(qa.iter().zip(&qb).map(|(x, y)| (y - x) / (b - a)).collect())
            }
        }
    }

    fn time_derivative(&self, q: &[f64], tau: f64) -> f64 {
        let h = 1e-5;
        let f = |t: f64| self.hamiltonian.value(q, t);
        (8.0 * (f(tau + 0.5 * h) - f(tau - 0.5 * h)) - (f(tau + h) - f(tau - h))) / (6.0 * h)
    }

    fn try_jacobian(&self, p: &[f64]) -> Result<DMatrix<f64>> {
        let dx = self.seed.dim_in();
        let dv = self.v_dim();
        let (x, u) = (&p[..dx], p[dx]);
        let dg = match self.seed.jacobian(x) {
            Some(j) => j,
            None => fd_jacobian(self.seed.as_ref(), x, default_step(self.seed.domain().as_ref()))?,
        };
        let q0 = self.seed.eval(x);
        let (k, tau, rate) = self.schedule.at(u);
        let scale = q0.iter().fold(1.0_f64, |m, c| m.max(c.abs()));
        let a = fd_jacobian_fn(
            |y| self.fiber_point(y, k, tau).unwrap_or_else(|_| vec![f64::NAN; dv]),
            &q0,
            dv,
            1e-5 * scale,
        )?;
        let dq = a * dg;
        let q = self.fiber_point(&q0, k, tau)?;
        let mut j = DMatrix::zeros(dv + 2, dx + 2);
        j.view_mut((0, 0), (dv, dx)).copy_from(&dq);
        j[(dv, dx)] = 1.0;
        j[(dv + 1, dx + 1)] = 1.0;
        if rate != 0.0 {
            let q1 = self.isotopy.iterate(&q0, 1.0, k)?;
            let y = self.time_velocity(&q1, &q, tau)?;
            let grad = self.hamiltonian.field.gradient(&q, tau);
            for r in 0..dv {
                j[(r, dx)] = y[r] * rate;
            }
            for c in 0..dx {
                let s: f64 = (0..dv).map(|r| grad[r] * dq[(r, c)]).sum();
                j[(dv + 1, c)] = -rate * s;
            }
            let gy: f64 = grad.iter().zip(&y).map(|(g, v)| g * v).sum();
            j[(dv + 1, dx)] = -rate * rate * (gy + self.time_derivative(&q, tau));
        }
        Ok(j)
    }
}

impl SmoothMap for ChainMap {
    fn dim_in(&self) -> usize {
        self.seed.dim_in() + 2
    }

    fn dim_out(&self) -> usize {
        self.v_dim() + 2
    }

    fn domain(&self) -> SharedRegion {
        self.domain.clone()
    }

    fn eval(&self, p: &[f64]) -> Vec<f64> {
        let dx = self.seed.dim_in();
        let (u, v) = (p[dx], p[dx + 1]);
        let (k, tau, rate) = self.schedule.at(u);
        let q0 = self.seed.eval(&p[..dx]);
        match self.fiber_point(&q0, k, tau) {
            Ok(q) => {
                let shift = if rate != 0.0 { rate * self.hamiltonian.value(&q, tau) } else { 0.0 };
                let mut out = q;
                out.push(u);
                out.push(v - shift);
                out
            }
            Err(_) => vec![f64::NAN; self.dim_out()],
        }
    }

    fn jacobian(&self, p: &[f64]) -> Option<DMatrix<f64>> {
        self.try_jacobian(p).ok()
    }

    fn inverse(&self, y: &[f64]) -> Option<Vec<f64>> {
        if !matches!(self.isotopy.generator, Generator::Hamiltonian(_)) {
            return None;
        }
        let dv = self.v_dim();
        let (q, u, v) = (&y[..dv], y[dv], y[dv + 1]);
        let (k, tau, rate) = self.schedule.at(u);
        let mut q0 = if tau > 0.0 { self.isotopy.flow(q, tau, 0.0).ok()? } else { q.to_vec() };
        for _ in 0..k {
            q0 = self.isotopy.flow(&q0, 1.0, 0.0).ok()?;
        }
        let mut x = self.seed.inverse(&q0)?;
        let shift = if rate != 0.0 { rate * self.hamiltonian.value(q, tau) } else { 0.0 };
        x.push(u);
        x.push(v + shift);
        Some(x)
    }

    fn name(&self) -> String {
        format!("G[{}]", self.isotopy.describe())
    }
}

/// Checks the flags the formula for `G` relies on: 1-periodic, vanishing near
/// integer times and normalized to `min H = 0`.
pub fn check_chain_flags(iso: &Isotopy) -> Result<()> {
    let f = iso.flags();
    let mut missing = Vec::new();
    if !f.periodic {
        missing.push("1-periodic");
    }
    if f.vanishing_radius.is_none() {
        missing.push("vanishing near integers");
    }
    if !f.normalized {
        missing.push("min-normalized");
    }
    if missing.is_empty() {
        Ok(())
    } else {
        Err(Error::input(format!(
            "isotopy `{}` lacks flags: {}",
            iso.describe(),
            missing.join(", ")
        )))
    }
}

/// `G` over `Y_N(κ)` together with the skeleton it lives on.
#[derive(Clone)]
pub struct GEmbedding {
    pub map: Arc<ChainMap>,
    pub skeleton: PlanarSkeleton,
    pub margin: f64,
}

/// `G` on `B^{2m}(κ) × N(Y_N(κ))` for the seed `g` and the isotopy `φ_s`.
pub fn product_g_embedding(g: &EmbeddedBall, iso: &Isotopy, n: usize, kappa: f64, margin: Option<f64>) -> Result<GEmbedding> {
    check_chain_flags(iso)?;
    let skeleton = build_yn(n, kappa)?;
    let margin = margin.unwrap_or_else(|| skeleton.default_margin());
    chain_on_skeleton(g.map.clone(), iso, skeleton, margin)
}

pub(crate) fn chain_on_skeleton(seed: SharedMap, iso: &Isotopy, skeleton: PlanarSkeleton, margin: f64) -> Result<GEmbedding> {
    let schedule = ChainSchedule::for_skeleton(&skeleton)?;
    let base: SharedRegion = Arc::new(skeleton.neighborhood(margin));
    let map = ChainMap::new(seed, iso.clone(), schedule, base)?;
    Ok(GEmbedding {
        map: Arc::new(map),
        skeleton,
        margin,
    })
}

/// Options for [`unwrapped_ball_with`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct UnwrapOptions {
    pub margin: Option<f64>,
    /// Domain shrinking; `None` uses `1e−3·κ`.
    pub shrink: Option<f64>,
    /// Build the disc map for capacity `κ + shrink`, so the ball keeps
    /// capacity exactly `κ`.
    pub exact_capacity: bool,
}

/// `B^{2m+2}(κ − δ) → B^{2m}(κ) × N(Y_N(κ)) → V × ℝ²`.
#[derive(Clone)]
pub struct UnwrappedBall {
    pub ball: EmbeddedBall,
    pub seed: EmbeddedBall,
    pub g: GEmbedding,
    pub lift: Arc<DiscToSkeleton>,
    pub n: usize,
    pub kappa: f64,
}

impl UnwrappedBall {
    pub fn isotopy(&self) -> &Isotopy {
        &self.g.map.isotopy
    }

    pub fn margin(&self) -> f64 {
        self.g.margin
    }
}

pub fn unwrapped_ball(g: &EmbeddedBall, iso: &Isotopy, n: usize, kappa: f64) -> Result<UnwrappedBall> {
    unwrapped_ball_with(g, iso, n, kappa, UnwrapOptions::default())
}

pub fn unwrapped_ball_with(g: &EmbeddedBall, iso: &Isotopy, n: usize, kappa: f64, opts: UnwrapOptions) -> Result<UnwrappedBall> {
    let gm = product_g_embedding(g, iso, n, kappa, opts.margin)?;
    let shrink = opts.shrink.unwrap_or(DEFAULT_SHRINK_FRACTION * kappa);
    let disc_capacity = if opts.exact_capacity { kappa + shrink } else { kappa };
    let lift = Arc::new(DiscToSkeleton::new(disc_capacity, &gm.skeleton, gm.margin, shrink)?);
    let ball = spread_ball(g, &gm, lift.clone())?;
    Ok(UnwrappedBall {
        ball,
        seed: g.clone(),
        g: gm,
        lift,
        n,
        kappa,
    })
}

/// `(p, w) ↦ (p, disc(w))`: the fibred lift of a disc map over the
/// ball's first factor.
pub fn fibered_lift(fiber: SharedRegion, disc: SharedMap) -> ProductMap {
    ProductMap {
        factors: vec![Arc::new(identity(fiber)), disc],
    }
}

pub(crate) fn spread_ball(seed: &EmbeddedBall, gm: &GEmbedding, lift: Arc<DiscToSkeleton>) -> Result<EmbeddedBall> {
    let inner: SharedMap = Arc::new(fibered_lift(seed.map.domain(), lift.clone()));
    let map = Compose {
        outer: gm.map.clone(),
        inner,
    };
    EmbeddedBall::new(lift.effective_capacity(), Arc::new(map))
}

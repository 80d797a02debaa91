//! One-parameter families of unwrapped balls and their disjoining isotopies:
//! shrinking the seed, unwrapping to the inclusion, and lengthening the
//! rectangles until one is left.

use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ball::EmbeddedBall;
use crate::error::{Error, Result};
use crate::hamiltonian::{hofer_energy_upper, EnergyEstimate, EnergyGrid, FactorSum, HamiltonianFlags, StripTranslation, TimeDepHamiltonian};
use crate::isotopy::{delta_regular_check, strictly_disjoins, Isotopy, RegularityCertificate};
use crate::map::{affine, compose, SharedMap};
use crate::profile::{DiscToSkeleton, PolarRectangle};
use crate::region::BoxRegion;
use crate::skeleton::{build_yn, yn_abscissae, Component, PlanarSkeleton, Rect, Segment};
use crate::strip::StripWithQuotient;

use super::chain::{spread_ball, unwrapped_ball_with, ChainMap, ChainSchedule, GEmbedding, UnwrapOptions, UnwrappedBall};
use super::wrap::{tau_extension, EnergyLedger, WrappedBallResult};

#[derive(Clone)]
pub struct FamilySlice {
    pub t: f64,
    pub ball: EmbeddedBall,
    pub isotopy: Option<Isotopy>,
    pub ledger: EnergyLedger,
    pub energy: Option<EnergyEstimate>,
    /// Smallest exterior margin of the disjoined iterates.
    pub disjunction: Option<f64>,
    /// Capacities of the sub-balls over the rectangles.
    pub arms: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceRecord {
    pub t: f64,
    pub capacity: f64,
    pub max_defect: f64,
    pub energy: Option<f64>,
    pub ledger_total: f64,
    pub disjunction: Option<f64>,
    pub arms: Vec<f64>,
}

pub type SliceBuilder = Arc<dyn Fn(f64) -> Result<FamilySlice> + Send + Sync>;

#[derive(Clone)]
pub struct IsotopyFamily {
    pub name: String,
    /// Capacities never drop below this.
    pub floor: f64,
    pub slices: Vec<FamilySlice>,
    pub regularity: Option<RegularityCertificate>,
    builder: SliceBuilder,
}

impl IsotopyFamily {
    pub fn new(name: &str, floor: f64, ts: &[f64], builder: SliceBuilder) -> Result<Self> {
        let slices = ts.par_iter().map(|&t| builder(t)).collect::<Result<Vec<_>>>()?;
        Ok(Self {
            name: name.into(),
            floor,
            slices,
            regularity: None,
            builder,
        })
    }

    /// A slice at a parameter off the grid.
    pub fn slice_at(&self, t: f64) -> Result<FamilySlice> {
        (self.builder)(t)
    }

    /// Pullback defect of every slice, slices in parallel.
    pub fn verify(&self, samples: usize, seed: u64) -> Result<Vec<SliceRecord>> {
        self.slices
            .par_iter()
            .map(|s| {
                let mut ball = s.ball.clone();
                let rep = ball.verify(samples, seed)?;
                Ok(SliceRecord {
                    max_defect: rep.max_defect,
                    ..record(s)
                })
            })
            .collect()
    }

    /// Records without the defect check.
    pub fn records(&self) -> Vec<SliceRecord> {
        self.slices.iter().map(record).collect()
    }

    pub fn min_capacity(&self) -> f64 {
        self.slices.iter().map(|s| s.ball.capacity()).fold(f64::INFINITY, f64::min)
    }

    pub fn max_energy(&self) -> f64 {
        self.slices
            .iter()
            .filter_map(|s| s.energy.as_ref().map(|e| e.certified()))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// `max_p |B_{t+h}(p) − B_{t−h}(p)| / 2h` for `h` and `h/2`.
    pub fn t_derivative(&self, t: f64, h: f64, points: &[Vec<f64>]) -> Result<(f64, f64)> {
        let diff = |h: f64| -> Result<f64> {
            let (a, b) = (self.slice_at(t + h)?, self.slice_at(t - h)?);
            Ok(points
                .iter()
                .map(|p| {
                    let (ya, yb) = (a.ball.map.eval(p), b.ball.map.eval(p));
                    ya.iter().zip(&yb).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max) / (2.0 * h)
                })
                .fold(0.0, f64::max))
        };
        Ok((diff(h)?, diff(0.5 * h)?))
    }
}

fn record(s: &FamilySlice) -> SliceRecord {
    SliceRecord {
        t: s.t,
        capacity: s.ball.capacity(),
        max_defect: f64::NAN,
        energy: s.energy.as_ref().map(|e| e.certified()),
        ledger_total: s.ledger.total(),
        disjunction: s.disjunction,
        arms: s.arms.clone(),
    }
}

/// `t_k = k/(n − 1)`.
pub fn uniform_grid(n: usize) -> Vec<f64> {
    (0..n).map(|k| k as f64 / (n - 1).max(1) as f64).collect()
}

/// Restricts the unwrapped ball to concentric sub-balls of capacity
/// `c − t(c − λ)`, keeping the isotopy fixed.
pub fn shrink_family(b: &UnwrappedBall, lambda: f64, ts: &[f64]) -> Result<IsotopyFamily> {
    let c = b.ball.capacity();
    if !(lambda > 0.0 && lambda <= c) {
        return Err(Error::input(format!("need 0 < λ ≤ c = {c}, got λ = {lambda}")));
    }
    let b = b.clone();
    let builder: SliceBuilder = Arc::new(move |t: f64| {
        let cap = c - t * (c - lambda);
        let ball = EmbeddedBall::new(cap, b.ball.map.clone())?;
        let mut ledger = EnergyLedger::new();
        ledger.push("capacity", cap, "c − t(c − λ)");
        Ok(FamilySlice {
            t,
            ball,
            isotopy: Some(b.isotopy().clone()),
            ledger,
            energy: None,
            disjunction: None,
            arms: Vec::new(),
        })
    });
    IsotopyFamily::new("shrink", lambda, ts, builder)
}

/// The strip translation `σ` used by the unwrapping and rectangle families:
/// energy `λ + ε`, and `μ` small enough that `σ` is `δ`-regular for the
/// rectangle `[0, 1] × [0, λ]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegularTranslation {
    pub field: StripTranslation,
    pub lambda: f64,
    pub eps: f64,
    pub delta: f64,
}

impl RegularTranslation {
    /// Translation of `ℝ × [v_lo, v_lo + λ]`.
    pub fn new(lambda: f64, eps: f64, delta: f64, v_lo: f64) -> Result<Self> {
        if !(lambda > 0.0 && eps > 0.0 && delta > 0.0 && delta < 1.0) {
            return Err(Error::input("need λ, ε > 0 and 0 < δ < 1"));
        }
        let w = 0.1 * eps;
        let nu = (lambda + eps) / (lambda + w);
        let mu = (0.5 * delta * (nu - 1.0) / (0.75 * nu)).min(0.01);
        if !(nu * (1.0 - 1.5 * mu) > 1.0) {
            return Err(Error::construction(format!("translation ν = {nu} too slow for μ = {mu}")));
        }
        let field = StripTranslation::new(2, 0, nu, v_lo, v_lo + lambda, w, Some(mu))?;
        Ok(Self {
            field,
            lambda,
            eps,
            delta,
        })
    }

    pub fn mu(&self) -> f64 {
        self.field.mu.expect("set on construction")
    }

    pub fn hamiltonian(&self, scale: f64) -> Result<TimeDepHamiltonian> {
        let reach = self.field.nu + 2.0;
        let h = TimeDepHamiltonian::new(
            Arc::new(self.field),
            vec![-reach, self.field.v_bottom()],
            vec![reach, self.field.v_peak()],
            HamiltonianFlags {
                periodic: true,
                vanishing_radius: Some(0.5 * self.mu()),
                normalized: true,
            },
        )?;
        Ok(h.scaled(scale))
    }

    pub fn isotopy(&self, scale: f64) -> Result<Isotopy> {
        Ok(Isotopy::hamiltonian(self.hamiltonian(scale)?))
    }
}

fn rotated_seed(lambda: f64) -> Result<EmbeddedBall> {
    let polar = PolarRectangle::new(lambda, lambda)?;
    let rot = affine("rotation by π", Arc::new(BoxRegion::cube(2, 10.0 + lambda)), -DMatrix::identity(2, 2), vec![0.0, 0.0]);
    EmbeddedBall::new(lambda, Arc::new(compose(Arc::new(rot), Arc::new(polar))?))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FamilySettings {
    pub samples: usize,
    pub seed: u64,
    pub grid: EnergyGrid,
}

impl Default for FamilySettings {
    fn default() -> Self {
        Self {
            samples: 400,
            seed: 5,
            grid: EnergyGrid {
                per_axis: 9,
                time_points: 21,
            },
        }
    }
}

/// `σ^t_s = σ_{(1−t)s}` on the seed, lifted to `ρ^t_s = σ_{−ts} × τ^t_s`
/// where `τ^t` extends the translation of the strip with pockets of depth
/// `(1 − t)(λ + ε)`; at `t = 1` the ball is the inclusion of
/// `B²(λ) × N(Y_N(λ))` and `ρ¹` the inverse translation.
pub fn unwrap_isotopy_family(lambda: f64, eps: f64, delta: f64, n: usize, ts: &[f64], settings: FamilySettings) -> Result<IsotopyFamily> {
    if n < 2 {
        return Err(Error::input("need N ≥ 2"));
    }
    let base = RegularTranslation::new(lambda, eps, delta, -lambda)?;
    let seed = rotated_seed(lambda)?;
    let m = base.mu();
    let end = Isotopy::hamiltonian(base.hamiltonian(-1.0)?);
    let s_grid: Vec<f64> = (0..=20).map(|k| delta + (1.0 - delta) * k as f64 / 20.0).collect();
    let regularity = delta_regular_check(&end, &seed, delta, &s_grid, settings.samples, n, settings.seed)?;
    if !regularity.passed {
        let bad = regularity.slices.iter().find(|(_, m)| *m <= 0.0).map(|(s, _)| *s).unwrap_or(f64::NAN);
        return Err(Error::construction(format!("endpoint isotopy is not δ-regular at s = {bad}")));
    }
    let builder: SliceBuilder = Arc::new(move |t: f64| {
        let sigma = base.isotopy(1.0 - t)?;
        let opts = UnwrapOptions {
            margin: Some(m),
            shrink: None,
            exact_capacity: true,
        };
        let ub = unwrapped_ball_with(&seed, &sigma, n, lambda, opts)?;
        let depth = (1.0 - t) * (lambda + eps);
        let strip = StripWithQuotient::for_yn(n, lambda, depth, m, m, 0.5 * m)?;
        let ext = tau_extension(&strip, 0.5 * eps, 2)?;
        let back = base.hamiltonian(-t)?;
        let k = ext.isotopy.hamiltonian_ref().expect("hamiltonian").clone();
        let mut lo = back.support_lo.clone();
        lo.extend(&k.support_lo);
        let mut hi = back.support_hi.clone();
        hi.extend(&k.support_hi);
        let rho = TimeDepHamiltonian::new(
            Arc::new(FactorSum {
                parts: vec![back.field.clone(), k.field.clone()],
            }),
            lo,
            hi,
            HamiltonianFlags {
                periodic: true,
                vanishing_radius: None,
                normalized: false,
            },
        )?;
        let energy = hofer_energy_upper(&rho, &settings.grid);
        let rho = Isotopy::hamiltonian(rho);
        let disj = strictly_disjoins(&rho, &ub.ball, n, settings.samples, settings.seed)?;
        let mut ledger = EnergyLedger::new();
        ledger
            .push("rectangles", lambda / n as f64, "λ/N")
            .push("pockets", depth, "(1 − t)(λ + ε)")
            .push("inverse translation", t * (lambda + eps), "t(λ + ε)")
            .push("extension slack", 0.5 * eps, "ε/2")
            .push("unused slack", 0.5 * eps, "ε/2");
        Ok(FamilySlice {
            t,
            ball: ub.ball,
            isotopy: Some(rho),
            ledger,
            energy: Some(energy),
            disjunction: Some(disj.min_margin),
            arms: Vec::new(),
        })
    });
    let mut fam = IsotopyFamily::new("unwrap", lambda, ts, builder)?;
    fam.regularity = Some(regularity);
    Ok(fam)
}

/// `W^s`: rectangles `[a_i, b_i + s] × [0, λ]` joined by segments of length
/// `1 − s`.
pub fn stretched_yn(n: usize, lambda: f64, s: f64) -> Result<PlanarSkeleton> {
    let (a, b) = yn_abscissae(n);
    let mut components = Vec::with_capacity(2 * n - 1);
    for i in 0..n {
        components.push(Component::Rect(Rect::new(a[i], b[i] + s, 0.0, lambda)?));
        if i + 1 < n {
            components.push(Component::Segment(Segment::new([b[i] + s, 0.0], [a[i + 1], 0.0])?));
        }
    }
    PlanarSkeleton::new(components)
}

/// The rectangles of the wrapped ball lengthened to `[a_i, b_i + s]`, the
/// isotopy running over segments of length `1 − s`, for
/// `0 ≤ s ≤ s₀ = 1 − 1/N`. Each slice is checked to be disjoined by the
/// strip translation.
pub fn regiso_family(bw: &WrappedBallResult, delta: f64, ss: &[f64], settings: FamilySettings) -> Result<IsotopyFamily> {
    let n = bw.n;
    let lambda = bw.kappa;
    if !(delta > 0.0 && delta < 1.0 / n as f64) {
        return Err(Error::input(format!("need 0 < δ < 1/N = {}, got {delta}", 1.0 / n as f64)));
    }
    let ub = &bw.unwrapped;
    let iso = ub.isotopy().clone();
    let s_grid: Vec<f64> = (0..=20).map(|k| delta + (1.0 - delta) * k as f64 / 20.0).collect();
    let regularity = delta_regular_check(&iso, &ub.seed, delta, &s_grid, settings.samples, n, settings.seed)?;
    if !regularity.passed {
        return Err(Error::input("the disjoining isotopy is not δ-regular"));
    }
    let h = iso
        .hamiltonian_ref()
        .cloned()
        .ok_or_else(|| Error::input("the isotopy carries no Hamiltonian"))?;
    let s0 = 1.0 - 1.0 / n as f64;
    let seed = ub.seed.clone();
    let margin = ub.margin();
    let shrink = ub.lift.shrink;
    let period = bw.strip.step;
    let energy = bw.energy.clone();
    let builder: SliceBuilder = Arc::new(move |s: f64| {
        if !(-1e-12..=s0 + 1e-12).contains(&s) {
            return Err(Error::input(format!("s = {s} outside [0, {s0}]")));
        }
        let s = s.clamp(0.0, s0);
        let skel = stretched_yn(n, lambda, s)?;
        let scaled = Isotopy::hamiltonian(h.scaled(1.0 - s));
        let gm = if s < s0 {
            let (_, b) = yn_abscissae(n);
            let starts = b[..n - 1].iter().map(|x| x + s).collect();
            let schedule = ChainSchedule::new(starts, 1.0 - s)?;
            let base = Arc::new(skel.neighborhood(margin));
            let map = ChainMap::new(seed.map.clone() as SharedMap, scaled.clone(), schedule, base)?;
            GEmbedding {
                map: Arc::new(map),
                skeleton: skel.clone(),
                margin,
            }
        } else {
            let single = PlanarSkeleton::new(vec![Component::Rect(Rect::new(0.0, 1.0, 0.0, lambda)?)])?;
            let schedule = ChainSchedule::new(Vec::new(), 1.0)?;
            let base = Arc::new(single.neighborhood(margin));
            let map = ChainMap::new(seed.map.clone(), scaled.clone(), schedule, base)?;
            GEmbedding {
                map: Arc::new(map),
                skeleton: single,
                margin,
            }
        };
        let lift = Arc::new(DiscToSkeleton::new(lambda + shrink, &gm.skeleton, margin, shrink)?);
        let ball = spread_ball(&seed, &gm, lift)?;
        let arms: Vec<f64> = (0..n)
            .map(|i| (lambda * (1.0 - i as f64 / n as f64 - i as f64 * s)).max(0.0))
            .collect();
        let pts = ball.image_samples(ball.capacity(), settings.samples, settings.seed)?;
        let mut worst = f64::INFINITY;
        for k in 1..=n {
            for y in &pts {
                let mut z = y.clone();
                let d = z.len();
                z[d - 2] += k as f64 * period;
                worst = worst.min(ball.exterior_margin(&z));
            }
        }
        if !(worst > 0.0) {
            return Err(Error::construction(format!("τ_S fails to disjoin the slice at s = {s}: margin {worst:.3e}")));
        }
        let mut ledger = EnergyLedger::new();
        ledger
            .push("rectangles", (1.0 / n as f64 + s) * lambda, "(1/N + s)λ")
            .push("pockets", energy.certified(), "e");
        Ok(FamilySlice {
            t: s,
            ball,
            isotopy: Some(scaled),
            ledger,
            energy: Some(energy.clone()),
            disjunction: Some(worst),
            arms,
        })
    });
    let mut fam = IsotopyFamily::new("regiso", lambda, ss, builder)?;
    fam.regularity = Some(regularity);
    Ok(fam)
}

/// The wrapped ball whose isotopy is the `δ`-regular translation of energy
/// `λ + ε`, built with capacity exactly `λ`.
pub fn regular_wrapped_ball(lambda: f64, eps: f64, delta: f64, n: usize) -> Result<WrappedBallResult> {
    let base = RegularTranslation::new(lambda, eps, delta, 0.0)?;
    let seed = EmbeddedBall::new(lambda, Arc::new(PolarRectangle::new(lambda, lambda)?))?;
    let opts = UnwrapOptions {
        margin: Some(base.mu()),
        shrink: None,
        exact_capacity: true,
    };
    let ub = unwrapped_ball_with(&seed, &base.isotopy(1.0)?, n, lambda, opts)?;
    super::wrap::wrap_quotient(&ub, eps, super::wrap::WrapSettings::default())
}

/// `B²(λ) × N(Y_N(λ))`, the unwrapped ball of the identity.
pub fn inclusion_ball(lambda: f64, n: usize, margin: f64) -> Result<UnwrappedBall> {
    let seed = rotated_seed(lambda)?;
    let _ = build_yn(n, lambda)?;
    let opts = UnwrapOptions {
        margin: Some(margin),
        shrink: None,
        exact_capacity: true,
    };
    unwrapped_ball_with(&seed, &Isotopy::identity(2), n, lambda, opts)
}

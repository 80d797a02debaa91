//! Isotopies: Hamiltonian flows (exact, adaptive or fixed-step) and explicit
//! families, plus sample-based disjunction and regularity checks.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ball::EmbeddedBall;
use crate::error::{check_dim, Error, Result};
use crate::hamiltonian::{symplectic_gradient, HamiltonianFlags, StripTranslation, TimeDepHamiltonian};
use crate::integrate::{dopri5, rk4, IntegratorSettings};
use crate::map::SmoothMap;
use crate::region::SharedRegion;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum FlowMethod {
    /// Closed-form flow when the field provides one, adaptive otherwise.
    Auto,
    /// Dormand–Prince 5(4) at the settings' tolerance.
    Adaptive,
    /// Classical RK4 with this many steps per unit time.
    Rk4 { steps_per_unit: usize },
}

type ExplicitFn = Arc<dyn Fn(&[f64], f64) -> Vec<f64> + Send + Sync>;

/// `s ↦ ψ_s` given pointwise, with an optional Hamiltonian it claims to be
/// generated by.
#[derive(Clone)]
pub struct ExplicitIsotopy {
    pub dim: usize,
    pub name: String,
    pub map: ExplicitFn,
    pub claimed: Option<TimeDepHamiltonian>,
}

#[derive(Clone)]
pub enum Generator {
    Hamiltonian(TimeDepHamiltonian),
    Explicit(ExplicitIsotopy),
}

#[derive(Clone)]
pub struct Isotopy {
    pub generator: Generator,
    pub settings: IntegratorSettings,
    pub method: FlowMethod,
}

impl std::fmt::Debug for Isotopy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Isotopy({})", self.describe())
    }
}

impl Isotopy {
    pub fn hamiltonian(h: TimeDepHamiltonian) -> Self {
        Self {
            generator: Generator::Hamiltonian(h),
            settings: IntegratorSettings::default(),
            method: FlowMethod::Auto,
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::hamiltonian(TimeDepHamiltonian::zero(dim))
    }

    pub fn explicit(
        dim: usize,
        name: impl Into<String>,
        map: impl Fn(&[f64], f64) -> Vec<f64> + Send + Sync + 'static,
        claimed: Option<TimeDepHamiltonian>,
    ) -> Self {
        Self {
            generator: Generator::Explicit(ExplicitIsotopy {
                dim,
                name: name.into(),
                map: Arc::new(map),
                claimed,
            }),
            settings: IntegratorSettings::default(),
            method: FlowMethod::Auto,
        }
    }

    pub fn with_method(mut self, method: FlowMethod) -> Self {
        self.method = method;
        self
    }

    pub fn dim(&self) -> usize {
        match &self.generator {
            Generator::Hamiltonian(h) => h.dim(),
            Generator::Explicit(e) => e.dim,
        }
    }

    /// The generating Hamiltonian, or the one an explicit family claims.
    pub fn hamiltonian_ref(&self) -> Option<&TimeDepHamiltonian> {
        match &self.generator {
            Generator::Hamiltonian(h) => Some(h),
            Generator::Explicit(e) => e.claimed.as_ref(),
        }
    }

    pub fn flags(&self) -> HamiltonianFlags {
        self.hamiltonian_ref().map(|h| h.flags).unwrap_or_default()
    }

    pub fn describe(&self) -> String {
        match &self.generator {
            Generator::Hamiltonian(h) => format!("flow of {}", h.field.describe()),
            Generator::Explicit(e) => format!("explicit {}", e.name),
        }
    }

    pub fn flow(&self, x: &[f64], s0: f64, s1: f64) -> Result<Vec<f64>> {
        flow(self, x, s0, s1)
    }

    /// Flow by the adaptive integrator regardless of `method`.
    pub fn flow_adaptive(&self, x: &[f64], s0: f64, s1: f64) -> Result<Vec<f64>> {
        match &self.generator {
            Generator::Hamiltonian(h) => {
                dopri5(|s, y| symplectic_gradient(h, y, s), s0, s1, x, &self.settings)
            }
            Generator::Explicit(_) => self.flow(x, s0, s1),
        }
    }

    /// `(φ_s)^k`, the `k`-th iterate of the time-`s` map.
    pub fn iterate(&self, x: &[f64], s: f64, k: usize) -> Result<Vec<f64>> {
        let mut y = x.to_vec();
        for _ in 0..k {
            y = self.flow(&y, 0.0, s)?;
        }
        Ok(y)
    }

    /// The map `φ_{s0 → s1}` on the given domain.
    pub fn time_map(&self, s0: f64, s1: f64, domain: SharedRegion) -> FlowMap {
        FlowMap {
            iso: self.clone(),
            s0,
            s1,
            domain,
        }
    }
}

/// Solves `ẋ = X_{H_s}(x)` from `s0` to `s1`.
pub fn flow(iso: &Isotopy, x: &[f64], s0: f64, s1: f64) -> Result<Vec<f64>> {
    check_dim(iso.dim(), x.len())?;
    match &iso.generator {
        Generator::Explicit(e) => {
            if s0 != 0.0 {
                return Err(Error::input("explicit isotopies only flow from s = 0"));
            }
            Ok((e.map)(x, s1))
        }
        Generator::Hamiltonian(h) => match iso.method {
            FlowMethod::Auto => match h.field.exact_flow(x, s0, s1) {
                Some(y) => Ok(y),
                None => iso.flow_adaptive(x, s0, s1),
            },
            FlowMethod::Adaptive => iso.flow_adaptive(x, s0, s1),
            FlowMethod::Rk4 { steps_per_unit } => {
                let steps = ((s1 - s0).abs() * steps_per_unit as f64).ceil().max(1.0) as usize;
                rk4(|s, y| symplectic_gradient(h, y, s), s0, s1, x, steps)
            }
        },
    }
}

/// `φ_{s0 → s1}` as a [`SmoothMap`]; failures evaluate to NaN so the
/// verifiers report them as numeric errors.
#[derive(Clone)]
pub struct FlowMap {
    pub iso: Isotopy,
    pub s0: f64,
    pub s1: f64,
    pub domain: SharedRegion,
}

impl SmoothMap for FlowMap {
    fn dim_in(&self) -> usize {
        self.iso.dim()
    }

    fn dim_out(&self) -> usize {
        self.iso.dim()
    }

    fn domain(&self) -> SharedRegion {
        self.domain.clone()
    }

    fn eval(&self, p: &[f64]) -> Vec<f64> {
        self.iso
            .flow(p, self.s0, self.s1)
            .unwrap_or_else(|_| vec![f64::NAN; p.len()])
    }

    fn inverse(&self, q: &[f64]) -> Option<Vec<f64>> {
        match self.iso.generator {
            Generator::Hamiltonian(_) => self.iso.flow(q, self.s1, self.s0).ok(),
            Generator::Explicit(_) => None,
        }
    }

    fn name(&self) -> String {
        format!("φ[{} → {}] of {}", self.s0, self.s1, self.iso.describe())
    }
}

/// Default relative width of the cut-off shoulders of strip translations.
pub const DEFAULT_CUTOFF: f64 = 1e-2;

/// 1-periodic translation of `ℝ × [0, h]` at speed `ν`, reparametrized in
/// time by `h_μ`.
pub fn strip_translation_isotopy(h: f64, nu: f64, mu: f64) -> Result<Isotopy> {
    strip_translation_with_cutoff(h, nu, mu, DEFAULT_CUTOFF)
}

pub fn strip_translation_with_cutoff(h: f64, nu: f64, mu: f64, cutoff: f64) -> Result<Isotopy> {
    if !(h > 0.0 && nu > 0.0) {
        return Err(Error::input(format!("need h, ν > 0; got h = {h}, ν = {nu}")));
    }
    if !(mu > 0.0 && mu < 0.25) {
        return Err(Error::input(format!("need 0 < μ < 1/4, got {mu}")));
    }
    let st = StripTranslation::new(2, 0, nu, 0.0, h, cutoff * h, Some(mu))?;
    let reach = nu + 1.0;
    let ham = TimeDepHamiltonian::new(
        Arc::new(st),
        vec![-reach, st.v_bottom()],
        vec![reach, st.v_peak()],
        HamiltonianFlags {
            periodic: true,
            vanishing_radius: Some(0.5 * mu),
            normalized: true,
        },
    )?;
    Ok(Isotopy::hamiltonian(ham))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisjunctionReport {
    /// Smallest `level − capacity` over sampled image points and iterates;
    /// positive means every sampled point left the ball.
    pub min_margin: f64,
    /// Iterate at which the margin is attained.
    pub worst_iterate: usize,
    pub worst_point: Vec<f64>,
    pub samples: usize,
    pub iterates: usize,
    pub disjoint: bool,
}

fn margin_scan(
    ball: &EmbeddedBall,
    target_capacity: f64,
    points: &[Vec<f64>],
    iterates: usize,
    step: impl Fn(&[f64]) -> Result<Vec<f64>> + Sync,
) -> Result<DisjunctionReport> {
    let per_point: Vec<Result<(f64, usize, Vec<f64>)>> = points
        .par_iter()
        .map(|q0| {
            let mut q = q0.clone();
            let mut best = (f64::INFINITY, 0, q0.clone());
            for k in 1..=iterates {
                q = step(&q)?;
                let m = ball.exterior_margin_of(&q, target_capacity);
                if m < best.0 {
                    best = (m, k, q0.clone());
                }
            }
            Ok(best)
        })
        .collect();
    let mut rep = DisjunctionReport {
        min_margin: f64::INFINITY,
        worst_iterate: 0,
        worst_point: Vec::new(),
        samples: points.len(),
        iterates,
        disjoint: false,
    };
    for r in per_point {
        let (m, k, p) = r?;
        if m < rep.min_margin || rep.worst_point.is_empty() {
            rep.min_margin = m;
            rep.worst_iterate = k;
            rep.worst_point = p;
        }
    }
    rep.disjoint = rep.min_margin > 0.0;
    Ok(rep)
}

/// Checks that `B, φ₁(B), …, φ_{k_max}(B)` are pairwise disjoint on samples.
/// For a 1-periodic isotopy `φ_k = φ₁ᵏ`, so it suffices that `φ_k(B)` misses
/// `B` for `1 ≤ k ≤ k_max`.
pub fn strictly_disjoins(iso: &Isotopy, ball: &EmbeddedBall, k_max: usize, samples: usize, seed: u64) -> Result<DisjunctionReport> {
    let pts = ball.image_samples(ball.capacity(), samples, seed)?;
    margin_scan(ball, ball.capacity(), &pts, k_max, |q| iso.flow(q, 0.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularityCertificate {
    pub delta: f64,
    pub slices: Vec<(f64, f64)>,
    pub passed: bool,
}

/// For each `s ∈ s_grid ∩ [δ, 1]`, checks that `φ_sᵏ(B(sκ))` misses `B(κ)` for
/// `1 ≤ k ≤ k_max`; the pairwise disjointness of the iterates follows since
/// `B(sκ) ⊂ B(κ)`.
pub fn delta_regular_check(
    iso: &Isotopy,
    ball: &EmbeddedBall,
    delta: f64,
    s_grid: &[f64],
    samples: usize,
    k_max: usize,
    seed: u64,
) -> Result<RegularityCertificate> {
    let mut slices = Vec::new();
    for &s in s_grid.iter().filter(|&&s| s >= delta && s <= 1.0) {
        let pts = ball.image_samples(s * ball.capacity(), samples, seed)?;
        let rep = margin_scan(ball, ball.capacity(), &pts, k_max, |q| iso.flow(q, 0.0, s))?;
        slices.push((s, rep.min_margin));
    }
    let passed = !slices.is_empty() && slices.iter().all(|(_, m)| *m > 0.0);
    Ok(RegularityCertificate { delta, slices, passed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Expr;
    use crate::hamiltonian::ExprField;
    use crate::map::{default_step, pullback_defect};
    use crate::profile::PolarRectangle;
    use crate::region::BoxRegion;
    use crate::sampling::sample_interior;

    fn expr_iso(src: &str) -> Isotopy {
        let h = TimeDepHamiltonian::new(
            Arc::new(ExprField { expr: Expr::parse(src, 2).unwrap() }),
            vec![-2.0, -2.0],
            vec![2.0, 2.0],
            HamiltonianFlags::default(),
        )
        .unwrap();
        Isotopy::hamiltonian(h)
    }

    #[test]
    fn zero_and_rotation() {
        let id = Isotopy::identity(2);
        assert_eq!(id.flow(&[0.3, 0.1], 0.0, 1.0).unwrap(), vec![0.3, 0.1]);
        let rot = expr_iso("0.5*(x^2+y^2)");
        let p = rot.flow(&[0.7, -0.2], 0.0, 2.0 * std::f64::consts::PI).unwrap();
        assert!((p[0] - 0.7).abs() < 1e-7 && (p[1] + 0.2).abs() < 1e-7);
        let q = rot.flow(&[1.0, 0.0], 0.0, 0.5 * std::f64::consts::PI).unwrap();
        assert!((q[1] + 1.0).abs() < 1e-8, "clockwise: {q:?}");
    }

    #[test]
    fn strip_translation_displacement_and_fixed_points() {
        let iso = strip_translation_isotopy(1.0, 1.5, 0.1).unwrap();
        let h = crate::smooth::PeriodicBump::new(0.1);
        let n = 100_000;
        let quad: f64 = (0..n).map(|k| h.value((k as f64 + 0.5) / n as f64)).sum::<f64>() / n as f64;
        let exact = iso.flow(&[0.0, 0.5], 0.0, 1.0).unwrap();
        assert!((exact[0] - 1.5 * quad).abs() < 1e-7);
        let numeric = iso.flow_adaptive(&[0.0, 0.5], 0.0, 1.0).unwrap();
        assert!((numeric[0] - exact[0]).abs() < 1e-7);
        assert_eq!(iso.flow(&[0.2, 1.5], 0.0, 1.0).unwrap(), vec![0.2, 1.5]);
        assert_eq!(iso.flow(&[0.2, -0.5], 0.0, 1.0).unwrap(), vec![0.2, -0.5]);
    }

    #[test]
    fn flow_round_trip_and_symplectic() {
        let iso = expr_iso("bump(x^2 + y^2) * (1 + 0.5*sin(2*pi*s)) * x");
        let p = iso.flow(&[0.3, 0.2], 0.0, 0.7).unwrap();
        let q = iso.flow(&p, 0.7, 0.0).unwrap();
        assert!((q[0] - 0.3).abs() < 1e-7 && (q[1] - 0.2).abs() < 1e-7);
        let rk = iso.clone().with_method(FlowMethod::Rk4 { steps_per_unit: 200 });
        let dom: SharedRegion = Arc::new(BoxRegion::cube(2, 0.8));
        let map = rk.time_map(0.0, 1.0, dom.clone());
        let pts = sample_interior(dom.as_ref(), 500, 3, default_step(dom.as_ref())).unwrap();
        assert!(pullback_defect(&map, &pts, default_step(dom.as_ref())).unwrap().max_defect < 1e-5);
    }

    fn regular_ball(kappa: f64) -> EmbeddedBall {
        EmbeddedBall::new(kappa, Arc::new(PolarRectangle::new(kappa, kappa).unwrap())).unwrap()
    }

    #[test]
    fn disjunction_by_translation_and_identity() {
        let ball = regular_ball(1.0);
        let iso = strip_translation_isotopy(1.0, 1.5, 0.01).unwrap();
        let rep = strictly_disjoins(&iso, &ball, 5, 2_000, 1).unwrap();
        assert!(rep.disjoint, "{rep:?}");
        let rep = strictly_disjoins(&Isotopy::identity(2), &ball, 1, 500, 1).unwrap();
        assert!(!rep.disjoint && rep.min_margin <= 0.0);
    }

    #[test]
    fn strip_example_is_regular() {
        let ball = regular_ball(1.0);
        let iso = strip_translation_isotopy(1.0, 1.5, 0.01).unwrap();
        let grid: Vec<f64> = (0..=20).map(|k| k as f64 / 20.0).collect();
        let cert = delta_regular_check(&iso, &ball, 0.1, &grid, 1_000, 4, 2).unwrap();
        assert!(cert.passed, "{cert:?}");
        let cert = delta_regular_check(&Isotopy::identity(2), &ball, 0.1, &grid, 200, 1, 2).unwrap();
        assert!(!cert.passed);
        assert!(cert.slices.iter().all(|(_, m)| *m <= 0.0));
    }
}

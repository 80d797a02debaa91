//! The wrapped ball: the unwrapped ball pushed into `V × X`, where
//! `X = S/τ_S` has area `A = κ/N + e`, together with its energy ledger and
//! the certificates that must hold for it to be honest.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::ball::EmbeddedBall;
use crate::error::{Error, Result};
use crate::hamiltonian::{hofer_energy_upper, EnergyEstimate, EnergyGrid, Field, HamiltonianFlags, TimeDepHamiltonian};
use crate::isotopy::{strictly_disjoins, strip_translation_isotopy, DisjunctionReport, Generator, Isotopy, DEFAULT_CUTOFF};
use crate::map::{default_step, pullback_defect, SmoothMap};
use crate::profile::PolarRectangle;
use crate::region::BoxRegion;
use crate::sampling::sample_interior;
use crate::smooth::{BumpFunction, PeriodicBump};
use crate::strip::{annulus_quotient, AnnulusQuotient, StripEnvelope, StripWithQuotient};

use super::chain::UnwrappedBall;
use super::monitor::observe_global;
use super::quotient::QuotientBallMap;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerTerm {
    pub name: String,
    pub value: f64,
    pub note: String,
}

/// Additive energy or area budget.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EnergyLedger {
    pub terms: Vec<LedgerTerm>,
}

impl EnergyLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, name: &str, value: f64, note: &str) -> &mut Self {
        self.terms.push(LedgerTerm {
            name: name.into(),
            value,
            note: note.into(),
        });
        self
    }

    pub fn total(&self) -> f64 {
        self.terms.iter().map(|t| t.value).sum()
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.terms.iter().find(|t| t.name == name).map(|t| t.value)
    }
}

/// One checked property with the place where it is worst.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub name: String,
    pub passed: bool,
    pub measured: f64,
    pub tolerance: f64,
    pub location: Option<Vec<f64>>,
    pub context: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WrapSettings {
    pub samples: usize,
    pub seed: u64,
    pub pairs: usize,
}

impl Default for WrapSettings {
    fn default() -> Self {
        Self {
            samples: 2000,
            seed: 11,
            pairs: 100,
        }
    }
}

#[derive(Clone)]
pub struct WrappedBallResult {
    pub kappa: f64,
    pub n: usize,
    pub energy: EnergyEstimate,
    pub eps: f64,
    pub unwrapped: UnwrappedBall,
    pub strip: StripWithQuotient,
    pub quotient: Arc<AnnulusQuotient>,
    pub ball: EmbeddedBall,
    pub ledger: EnergyLedger,
    pub disjunction: DisjunctionReport,
    /// Largest `|X(p) − X(τ_S p)|` over sampled strip points.
    pub identification: f64,
    /// The ball does not fit its cylinder: non-squeezing says some
    /// certificate must fail.
    pub counterfactual: bool,
}

/// `V × N(Y_N) → V × X ⊂ V × B²(A + ε)`.
pub fn wrap_quotient(ub: &UnwrappedBall, eps: f64, settings: WrapSettings) -> Result<WrappedBallResult> {
    let iso = ub.isotopy();
    let h = iso
        .hamiltonian_ref()
        .ok_or_else(|| Error::input("the isotopy carries no Hamiltonian to bound its energy"))?;
    let energy = hofer_energy_upper(h, &EnergyGrid::default());
    let e = energy.certified();
    let disjunction = strictly_disjoins(iso, &ub.seed, ub.n - 1, settings.samples, settings.seed)?;
    if !disjunction.disjoint {
        return Err(Error::input(format!(
            "isotopy does not strictly disjoin the seed: iterate {} comes within {:.3e}",
            disjunction.worst_iterate, disjunction.min_margin
        )));
    }
    let m = ub.margin();
    let vanish = iso.flags().vanishing_radius.unwrap_or(0.0);
    if m > 2.0 * vanish {
        return Err(Error::input(format!(
            "skeleton margin {m} exceeds twice the vanishing radius {vanish}"
        )));
    }
    let strip = StripWithQuotient::for_yn(ub.n, ub.kappa, e, m, m, 0.5 * m)?;
    let quotient = Arc::new(annulus_quotient(&strip, eps)?);
    let map = QuotientBallMap::new(ub.ball.clone(), quotient.clone());
    let ball = EmbeddedBall::new(ub.ball.capacity(), Arc::new(map))?;
    let mut ledger = EnergyLedger::new();
    ledger
        .push("rectangles", ub.kappa / ub.n as f64, "κ/N")
        .push("pockets", e, "energy e of the isotopy")
        .push("quotient slack", eps, "ε");
    let region = strip.region();
    let identification = sample_interior(&region, settings.pairs, settings.seed, 0.0)?
        .iter()
        .map(|p| {
            let (a, b) = (quotient.eval(p), quotient.eval(&strip.translate(p, 1)));
            (a[0] - b[0]).abs().max((a[1] - b[1]).abs())
        })
        .fold(0.0, f64::max);
    let counterfactual = ball.capacity() > ledger.total();
    Ok(WrappedBallResult {
        kappa: ub.kappa,
        n: ub.n,
        energy,
        eps,
        unwrapped: ub.clone(),
        strip,
        quotient,
        ball,
        ledger,
        disjunction,
        identification,
        counterfactual,
    })
}

impl WrappedBallResult {
    /// `A = κ/N + e`.
    pub fn area(&self) -> f64 {
        self.strip.area
    }

    pub fn cylinder_capacity(&self) -> f64 {
        self.ledger.total()
    }

    fn locate(&self, p: &[f64]) -> String {
        let dv = self.unwrapped.seed.dim();
        let u = self.unwrapped.lift.eval(&p[dv..])[0];
        let (k, tau, rate) = self.unwrapped.g.map.schedule.at(u);
        if rate > 0.0 {
            format!("segment L{} at local time {tau:.4} (u = {u:.4})", k + 1)
        } else {
            format!("rectangle P{} (u = {u:.4})", k + 1)
        }
    }

    /// Runs every certificate; the first failing one localizes the defect.
    pub fn certify(&mut self, samples: usize, seed: u64) -> Result<Vec<Certificate>> {
        let mut out = Vec::new();
        let rep = self.ball.verify(samples, seed)?;
        out.push(Certificate {
            name: "wrapped ball symplectic".into(),
            passed: rep.max_defect < 1e-6,
            measured: rep.max_defect,
            tolerance: 1e-6,
            context: self.locate(&rep.worst_point),
            location: Some(rep.worst_point),
        });
        let iso = self.unwrapped.isotopy().clone();
        let claimed = iso.hamiltonian_ref().cloned().expect("checked on construction");
        let gen = Isotopy::hamiltonian(claimed);
        let seed_ball = &self.unwrapped.seed;
        let d = strictly_disjoins(&gen, seed_ball, (self.n - 1).max(1), samples.min(2000), seed)?;
        out.push(Certificate {
            name: "generator disjoins seed".into(),
            passed: d.disjoint,
            measured: d.min_margin,
            tolerance: 0.0,
            context: format!("iterate {}", d.worst_iterate),
            location: Some(d.worst_point),
        });
        out.push(time_map_certificate(&iso, seed_ball, samples.min(500), seed)?);
        let qm = QuotientBallMap::new(self.unwrapped.ball.clone(), self.quotient.clone());
        let pts = self.ball.domain_samples(self.ball.capacity(), (samples / 4).max(50), seed + 1, 0.0)?;
        let mut worst = (0usize, Vec::new());
        for p in &pts {
            let n = qm.preimages(&qm.eval(p)).len();
            if n > worst.0 {
                worst = (n, p.clone());
            }
        }
        out.push(Certificate {
            name: "τ_S iterates disjoin the image".into(),
            passed: worst.0 == 1,
            measured: worst.0 as f64,
            tolerance: 1.0,
            context: format!("{} sampled points", pts.len()),
            location: Some(worst.1),
        });
        out.push(Certificate {
            name: "quotient identifies p and τ_S p".into(),
            passed: self.identification < 1e-12,
            measured: self.identification,
            tolerance: 1e-12,
            location: None,
            context: String::new(),
        });
        let verified = out.iter().all(|c| c.passed);
        let label = format!("wrapped κ = {} N = {} ε = {}", self.kappa, self.n, self.eps);
        observe_global(&label, self.ball.capacity(), self.cylinder_capacity(), verified, !self.counterfactual);
        Ok(out)
    }
}

/// Largest pullback defect of the time maps `φ_s`, `s ∈ {¼, ½, ¾, 1}`, on
/// the image of the seed ball.
pub fn time_map_certificate(iso: &Isotopy, seed: &EmbeddedBall, samples: usize, rng: u64) -> Result<Certificate> {
    let pts = seed.image_samples(seed.capacity(), samples, rng)?;
    let d = iso.dim();
    let (mut lo, mut hi) = (vec![f64::INFINITY; d], vec![f64::NEG_INFINITY; d]);
    for p in &pts {
        for i in 0..d {
            lo[i] = lo[i].min(p[i]);
            hi[i] = hi[i].max(p[i]);
        }
    }
    let pad = 0.1 * lo.iter().zip(&hi).map(|(a, b)| b - a).fold(0.0, f64::max) + 1e-3;
    let region = Arc::new(BoxRegion::new(
        lo.iter().map(|x| x - pad).collect(),
        hi.iter().map(|x| x + pad).collect(),
    ));
    let step = default_step(region.as_ref());
    let mut best = (f64::NEG_INFINITY, 0.0, Vec::new());
    for s in [0.25, 0.5, 0.75, 1.0] {
        let map = iso.time_map(0.0, s, region.clone());
        let rep = pullback_defect(&map, &pts, step)?;
        if rep.max_defect > best.0 {
            best = (rep.max_defect, s, rep.worst_point);
        }
    }
    Ok(Certificate {
        name: "time maps symplectic".into(),
        passed: best.0 < 1e-6,
        measured: best.0,
        tolerance: 1e-6,
        context: format!("s = {}", best.1),
        location: Some(best.2),
    })
}

/// Translation of `ℝ × [0, h]` whose Hamiltonian has energy `e`.
pub fn translation_for_energy(h: f64, e: f64, mu: f64) -> Result<Isotopy> {
    strip_translation_isotopy(h, e / (h * (1.0 + DEFAULT_CUTOFF)), mu)
}

/// A family that moves the rectangle `g(B²(κ)) = [−κ/h, 0] × [0, h]` off
/// itself while squeezing it vertically in between,
/// `ψ_s(u, v) = (u + Dρ(s), h/2 + (v − h/2)(1 − ½sin²πs))` with `D = 1.1κ/h`,
/// and which claims to be generated by a translation Hamiltonian of energy
/// `e`. For `e < κ` no honest isotopy does this.
pub fn compressing_pseudo_isotopy(kappa: f64, e: f64, h: f64) -> Result<(EmbeddedBall, Isotopy)> {
    let seed = EmbeddedBall::new(kappa, Arc::new(PolarRectangle::new(kappa, h)?))?;
    let claimed = translation_for_energy(h, e, 0.02)?;
    let claimed = claimed.hamiltonian_ref().cloned();
    let d = 1.1 * kappa / h;
    let bump = PeriodicBump::new(0.02);
    let rho = move |s: f64| bump.integral(s) / bump.period_integral();
    let iso = Isotopy::explicit(
        2,
        format!("compressing translation by {d:.4}"),
        move |x, s| {
            let squeeze = 1.0 - 0.5 * (PI * s).sin().powi(2);
            vec![x[0] + d * rho(s), 0.5 * h + (x[1] - 0.5 * h) * squeeze]
        },
        claimed,
    );
    Ok((seed, iso))
}

/// `H = B(ṽ)` in the coordinates `Ψ(u, v) = (T·W(u)/A_p, (A_p/T)(v − β(u))/w(u))`
/// that straighten the strip to `ℝ × (0, A_p/T)`; `Ψ` preserves area and
/// commutes with `τ_S`, and `B' ` equals `T` on the straightened strip.
pub struct NormalizedShear {
    pub envelope: StripEnvelope,
    pub dim: usize,
    pub pair: usize,
    pub beta: BumpFunction,
}

impl NormalizedShear {
    fn scale(&self) -> f64 {
        self.envelope.period_area() / self.envelope.period()
    }

    fn forward(&self, u: f64, v: f64) -> (f64, f64) {
        let env = &self.envelope;
        let k = self.scale();
        (env.cumulative(u) / k, k * (v - env.bottom(u)) / env.width(u))
    }

    fn backward(&self, ut: f64, vt: f64) -> (f64, f64) {
        let env = &self.envelope;
        let k = self.scale();
        let u = env.inverse_cumulative(k * ut);
        (u, env.bottom(u) + env.width(u) * vt / k)
    }
}

impl Field for NormalizedShear {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64], _s: f64) -> f64 {
        let (_, vt) = self.forward(x[2 * self.pair], x[2 * self.pair + 1]);
        self.beta.integral(vt)
    }

    fn gradient(&self, x: &[f64], _s: f64) -> Vec<f64> {
        let env = &self.envelope;
        let (u, v) = (x[2 * self.pair], x[2 * self.pair + 1]);
        let k = self.scale();
        let (b, w) = (env.bottom(u), env.width(u));
        let db = env.bottom_deriv(u);
        let dw = env.top_deriv(u) - db;
        let vt = k * (v - b) / w;
        let beta = self.beta.value(vt);
        let mut g = vec![0.0; x.len()];
        g[2 * self.pair] = beta * k * (-db * w - (v - b) * dw) / (w * w);
        g[2 * self.pair + 1] = beta * k / w;
        g
    }

    fn exact_flow(&self, x: &[f64], s0: f64, s1: f64) -> Option<Vec<f64>> {
        self.scaled_flow(x, s0, s1, 1.0)
    }

    fn scaled_flow(&self, x: &[f64], s0: f64, s1: f64, c: f64) -> Option<Vec<f64>> {
        let (ut, vt) = self.forward(x[2 * self.pair], x[2 * self.pair + 1]);
        let (u, v) = self.backward(ut + c * (s1 - s0) * self.beta.value(vt), vt);
        let mut y = x.to_vec();
        y[2 * self.pair] = u;
        y[2 * self.pair + 1] = v;
        Some(y)
    }

    fn range(&self) -> Option<(f64, f64)> {
        Some((0.0, self.beta.total_integral()))
    }

    fn describe(&self) -> String {
        format!("strip shear with plateau {} on ṽ ∈ [0, {}]", self.beta.plateau, self.beta.plateau_hi)
    }
}

#[derive(Clone)]
pub struct TauExtension {
    pub isotopy: Isotopy,
    pub strip: StripWithQuotient,
    pub eps: f64,
    /// `(A_p + A + ε)/2`, the exact oscillation of `H`.
    pub energy: f64,
    pub grid: EnergyEstimate,
}

impl TauExtension {
    pub fn bound(&self) -> f64 {
        self.strip.area + self.eps
    }
}

/// A 1-periodic isotopy of `V × ℝ²` (acting on the last pair, with `V` of
/// dimension `dim − 2`) whose time-1 map is `τ_S` on `S`, of energy at most
/// `A + ε`.
pub fn tau_extension(strip: &StripWithQuotient, eps: f64, dim: usize) -> Result<TauExtension> {
    if !(eps > 0.0) {
        return Err(Error::input(format!("ε must be positive, got {eps}")));
    }
    if dim < 2 || !dim.is_multiple_of(2) {
        return Err(Error::input(format!("dimension {dim} must be even and ≥ 2")));
    }
    let env = strip.envelope;
    let (t, ap) = (env.period(), env.period_area());
    let slack = strip.area + eps - ap;
    if !(slack > 0.0) {
        return Err(Error::construction(format!(
            "strip area per period {ap} exceeds A + ε = {}",
            strip.area + eps
        )));
    }
    let omega = slack / (2.0 * t);
    let beta = BumpFunction::new(t, 0.0, ap / t, omega);
    let pair = dim / 2 - 1;
    let field = NormalizedShear {
        envelope: env,
        dim,
        pair,
        beta,
    };
    let mut lo = vec![-1.0; dim];
    let mut hi = vec![1.0; dim];
    lo[2 * pair] = env.origin;
    hi[2 * pair] = env.origin + t;
    lo[2 * pair + 1] = env.v_min() - 1.0;
    hi[2 * pair + 1] = env.v_max() + 1.0;
    let ham = TimeDepHamiltonian::new(
        Arc::new(field),
        lo,
        hi,
        HamiltonianFlags {
            periodic: true,
            vanishing_radius: None,
            normalized: true,
        },
    )?;
    let grid = hofer_energy_upper(&ham, &EnergyGrid { per_axis: 41, time_points: 2 });
    Ok(TauExtension {
        energy: 0.5 * (ap + strip.area + eps),
        isotopy: Isotopy::hamiltonian(ham),
        strip: strip.clone(),
        eps,
        grid,
    })
}

/// Whether the isotopy is given by a Hamiltonian rather than by formula.
pub fn is_hamiltonian(iso: &Isotopy) -> bool {
    matches!(iso.generator, Generator::Hamiltonian(_))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructions::chain::unwrapped_ball;
    use crate::region::Region;

    fn polar_seed(kappa: f64) -> EmbeddedBall {
        EmbeddedBall::new(kappa, Arc::new(PolarRectangle::new(kappa, kappa).unwrap())).unwrap()
    }

    #[test]
    fn honest_wrap_fits_cylinder() {
        let iso = translation_for_energy(1.0, 1.05, 0.02).unwrap();
        let ub = unwrapped_ball(&polar_seed(1.0), &iso, 10, 1.0).unwrap();
        let mut w = wrap_quotient(&ub, 0.05, WrapSettings::default()).unwrap();
        assert!((w.cylinder_capacity() - 1.2).abs() < 1e-9, "{:?}", w.ledger);
        assert!(!w.counterfactual);
        let certs = w.certify(600, 3).unwrap();
        assert!(certs.iter().all(|c| c.passed), "{certs:#?}");
    }

    #[test]
    fn compressing_family_is_caught() {
        let (seed, iso) = compressing_pseudo_isotopy(1.0, 0.5, 1.0).unwrap();
        let ub = unwrapped_ball(&seed, &iso, 10, 1.0).unwrap();
        let mut w = wrap_quotient(&ub, 0.05, WrapSettings::default()).unwrap();
        assert!((w.cylinder_capacity() - 0.65).abs() < 1e-9);
        assert!(w.counterfactual);
        let certs = w.certify(600, 3).unwrap();
        let sym = &certs[0];
        assert!(!sym.passed && sym.measured > 1e-2, "{sym:?}");
        assert!(sym.context.starts_with("segment"), "{sym:?}");
        assert!(!certs[1].passed);
        assert!(!certs[2].passed && certs[2].measured > 1e-2);
    }

    #[test]
    fn tau_extension_translates_strip() {
        let strip = StripWithQuotient::for_yn(4, 1.0, 0.5, 0.01, 0.01, 0.005).unwrap();
        let ext = tau_extension(&strip, 0.05, 2).unwrap();
        assert!(ext.energy <= ext.bound());
        assert!(ext.grid.value <= ext.bound() + 1e-12, "{:?}", ext.grid);
        let region = strip.region();
        for p in sample_interior(&region, 200, 1, 0.0).unwrap() {
            let y = ext.isotopy.flow(&p, 0.0, 1.0).unwrap();
            let t = strip.translate(&p, 1);
            assert!((y[0] - t[0]).abs() < 1e-9 && (y[1] - t[1]).abs() < 1e-9, "{p:?} -> {y:?}");
            assert!(region.contains(&p));
        }
        let h = ext.isotopy.hamiltonian_ref().unwrap();
        let x = [0.3, -0.2];
        let a = h.field.gradient(&x, 0.0);
        let b = crate::hamiltonian::fd_gradient(|y| h.value(y, 0.0), &x);
        assert!((a[0] - b[0]).abs() + (a[1] - b[1]).abs() < 1e-6, "{a:?} {b:?}");
    }

    #[test]
    fn empty_pockets_bound() {
        let strip = StripWithQuotient::for_yn(4, 1.0, 0.0, 0.01, 0.01, 0.005).unwrap();
        let ext = tau_extension(&strip, 0.05, 4).unwrap();
        assert!(ext.energy <= 0.25 + 0.05);
    }
}

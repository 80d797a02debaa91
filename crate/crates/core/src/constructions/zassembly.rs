//! The three-piece embedding of `N(Z_{C,c})` into `ℝ² × X`: `g × id` over
//! `P₁`, the graph of the disjoining Hamiltonian over `L`, and `φ_Q ∘ g × id`
//! over `P₂`, followed by the quotient of the strip into an annulus of area
//! `e + (C − c)`.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::ball::EmbeddedBall;
use crate::error::{Error, Result};
use crate::hamiltonian::{hofer_energy_upper, EnergyGrid, Field, HamiltonianFlags, SharedField, StripTranslation, TimeDepHamiltonian};
use crate::hypersurface::GraphHypersurface;
use crate::isotopy::{strictly_disjoins, DisjunctionReport, Isotopy};
use crate::map::{affine, compose, SmoothMap};
use crate::profile::{DiscToSkeleton, DEFAULT_SHRINK_FRACTION};
use crate::region::BoxRegion;
use crate::skeleton::{build_z_profile, PlanarSkeleton, DEFAULT_MIN_AREA};
use crate::smooth::Ramp;
use crate::square::DiscToSquare;
use crate::strip::{annulus_quotient, AnnulusQuotient, StripEnvelope, StripWithQuotient};

use super::chain::{chain_on_skeleton, check_chain_flags, spread_ball, GEmbedding};
use super::quotient::QuotientBallMap;

/// `H ∘ τ⁻¹` for the shear `τ(u, v) = (u, v + F·ρ(u))` of one coordinate
/// pair, `ρ` a ramp from `u₀` to `u₁`; its flow is `τ ∘ φ^H ∘ τ⁻¹`.
pub struct ShearConjugate {
    pub inner: SharedField,
    pub pair: usize,
    pub ramp: Ramp,
    pub lift: f64,
}

impl ShearConjugate {
    fn unshear(&self, x: &[f64]) -> Vec<f64> {
        let mut y = x.to_vec();
        y[2 * self.pair + 1] -= self.lift * self.ramp.value(x[2 * self.pair]);
        y
    }

    fn shear(&self, mut y: Vec<f64>) -> Vec<f64> {
        y[2 * self.pair + 1] += self.lift * self.ramp.value(y[2 * self.pair]);
        y
    }
}

impl Field for ShearConjugate {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn value(&self, x: &[f64], s: f64) -> f64 {
        self.inner.value(&self.unshear(x), s)
    }

    fn gradient(&self, x: &[f64], s: f64) -> Vec<f64> {
        let mut g = self.inner.gradient(&self.unshear(x), s);
        let (iu, iv) = (2 * self.pair, 2 * self.pair + 1);
        g[iu] -= self.lift * self.ramp.deriv(x[iu]) * g[iv];
        g
    }

    fn exact_flow(&self, x: &[f64], s0: f64, s1: f64) -> Option<Vec<f64>> {
        Some(self.shear(self.inner.exact_flow(&self.unshear(x), s0, s1)?))
    }

    fn scaled_flow(&self, x: &[f64], s0: f64, s1: f64, c: f64) -> Option<Vec<f64>> {
        Some(self.shear(self.inner.scaled_flow(&self.unshear(x), s0, s1, c)?))
    }

    fn range(&self) -> Option<(f64, f64)> {
        self.inner.range()
    }

    fn describe(&self) -> String {
        format!("sheared ({}) lift {} on u ∈ [{}, {}]", self.inner.describe(), self.lift, self.ramp.x0, self.ramp.x1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SquareOptions {
    /// The seed is stretched by `diag(k, 1/k)`.
    pub aspect: f64,
    /// Shoulder of the translation profile relative to the strip height.
    pub cutoff: f64,
    pub mu: f64,
    /// Gap left between the ball and its translate, relative to its width.
    pub eta: f64,
}

impl Default for SquareOptions {
    fn default() -> Self {
        Self {
            aspect: 4.0,
            cutoff: 0.005,
            mu: 0.002,
            eta: 0.002,
        }
    }
}

/// A translation disjoining the ball `g(B²(c))` from `g(B²(C))`, where `g`
/// is a stretched disc-to-square map on `B²(C)`.
#[derive(Clone)]
pub struct SquareTranslation {
    pub seed: EmbeddedBall,
    pub small: f64,
    pub isotopy: Isotopy,
    pub energy: f64,
    pub width: f64,
    pub height: f64,
    pub nu: f64,
    pub options: SquareOptions,
}

pub fn square_translation(small: f64, big: f64, opts: SquareOptions) -> Result<SquareTranslation> {
    if !(small > 0.0 && small <= big) {
        return Err(Error::input(format!("need 0 < c ≤ C, got c = {small}, C = {big}")));
    }
    if !(opts.aspect >= 1.0 && opts.eta > 0.0) {
        return Err(Error::input("aspect must be ≥ 1 and the gap positive"));
    }
    let k = opts.aspect;
    let sq = DiscToSquare::new(big)?;
    let r_big = sq.half_side();
    let r = r_big * (small / big).sqrt();
    let stretch = affine(
        "stretch",
        Arc::new(BoxRegion::cube(2, 10.0 * k * r_big)),
        DMatrix::from_row_slice(2, 2, &[k, 0.0, 0.0, 1.0 / k]),
        vec![0.0, 0.0],
    );
    let g = compose(Arc::new(stretch), Arc::new(sq))?;
    let seed = EmbeddedBall::new(big, Arc::new(g))?;
    let (width, height) = (2.0 * r * k, 2.0 * r / k);
    let nu = width * (1.0 + opts.eta) / (1.0 - 1.5 * opts.mu);
    let st = StripTranslation::new(2, 0, nu, -0.5 * height, 0.5 * height, opts.cutoff * height, Some(opts.mu))?;
    let u0 = r * k;
    let shear = ShearConjugate {
        inner: Arc::new(st),
        pair: 0,
        ramp: Ramp::new(u0, u0 + opts.eta * width),
        lift: 2.0 * (r_big + r) / k,
    };
    let reach = r_big * k + nu + 1.0;
    let ham = TimeDepHamiltonian::new(
        Arc::new(shear),
        vec![-reach, st.v_bottom()],
        vec![reach, st.v_peak() + 2.0 * (r_big + r) / k],
        HamiltonianFlags {
            periodic: true,
            vanishing_radius: Some(0.5 * opts.mu),
            normalized: true,
        },
    )?;
    Ok(SquareTranslation {
        seed,
        small,
        isotopy: Isotopy::hamiltonian(ham),
        energy: st.energy(),
        width,
        height,
        nu,
        options: opts,
    })
}

impl SquareTranslation {
    /// `φ₁(g(B(c)))` against `g(B(c))` itself.
    pub fn disjunction(&self, samples: usize, seed: u64) -> Result<DisjunctionReport> {
        let ball = EmbeddedBall::new(self.small, self.seed.map.clone())?;
        strictly_disjoins(&self.isotopy, &ball, 1, samples, seed)
    }

    pub fn hypersurface(&self) -> GraphHypersurface {
        GraphHypersurface::new(self.isotopy.hamiltonian_ref().expect("hamiltonian isotopy").clone())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ZVariant {
    /// `Z_{2c,c}`: a ball of capacity `2c`.
    Z,
    /// `W_{c,c}`: a ball of capacity `c` over rectangles of area `c/2`.
    W,
}

impl ZVariant {
    /// `(C, c)` of the skeleton for the fibre capacity `c`.
    pub fn capacities(self, c: f64) -> (f64, f64) {
        match self {
            ZVariant::Z => (2.0 * c, c),
            ZVariant::W => (c, 0.5 * c),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZOptions {
    pub margin: f64,
    pub precondition_samples: usize,
    pub seed: u64,
}

impl Default for ZOptions {
    fn default() -> Self {
        Self {
            margin: 1e-3,
            precondition_samples: 2000,
            seed: 7,
        }
    }
}

#[derive(Clone)]
pub struct ZEmbedding {
    pub variant: ZVariant,
    pub big: f64,
    pub small: f64,
    pub skeleton: PlanarSkeleton,
    pub g: GEmbedding,
    pub unwrapped: EmbeddedBall,
    pub strip: StripWithQuotient,
    pub quotient: Arc<AnnulusQuotient>,
    pub ball: EmbeddedBall,
    pub energy: f64,
    pub eps: f64,
    /// `min(level − C)` of `φ_Q(g(B(c)))` against `g(B(C))`.
    pub precondition_margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapReport {
    pub samples: usize,
    pub max_preimages: usize,
    pub unresolved: usize,
}

/// Glues the three pieces for the seed `g` (a ball of capacity `C`) and the
/// hypersurface `Q` of the disjoining Hamiltonian.
pub fn assemble_z_embedding(
    seed: &EmbeddedBall,
    q: &GraphHypersurface,
    variant: ZVariant,
    c: f64,
    eps: f64,
    opts: ZOptions,
) -> Result<ZEmbedding> {
    let (big, small) = variant.capacities(c);
    if !(eps > 0.0) {
        return Err(Error::input(format!("ε must be positive, got {eps}")));
    }
    if seed.capacity() < big * (1.0 - 1e-12) {
        return Err(Error::input(format!("seed ball has capacity {} < {big}", seed.capacity())));
    }
    let iso = Isotopy::hamiltonian(q.hamiltonian.clone());
    check_chain_flags(&iso)?;
    let pts = seed.image_samples(small, opts.precondition_samples, opts.seed)?;
    let mut margin = f64::INFINITY;
    for p in &pts {
        let y = iso.flow(p, 0.0, 1.0)?;
        margin = margin.min(seed.exterior_margin_of(&y, big));
    }
    if !(margin > 0.0) {
        return Err(Error::input(format!(
            "φ_Q(g(B({small}))) meets g(B({big})): margin {margin:.3e}"
        )));
    }
    let vanish = iso.flags().vanishing_radius.unwrap_or(0.0);
    if opts.margin > 2.0 * vanish {
        return Err(Error::input(format!(
            "margin {} exceeds twice the vanishing radius {vanish}",
            opts.margin
        )));
    }
    let energy = hofer_energy_upper(&q.hamiltonian, &EnergyGrid::default()).certified();
    let skeleton = build_z_profile(big, small, DEFAULT_MIN_AREA)?;
    let g = chain_on_skeleton(seed.map.clone(), &iso, skeleton.clone(), opts.margin)?;
    let lift = Arc::new(DiscToSkeleton::new(big, &skeleton, opts.margin, DEFAULT_SHRINK_FRACTION * big)?);
    let unwrapped = spread_ball(seed, &g, lift)?;
    let m = opts.margin;
    let strip = StripWithQuotient::new(2, StripEnvelope::new(big - small, 1.0, energy, m, m, 0.5 * m)?)?;
    let quotient = Arc::new(annulus_quotient(&strip, eps)?);
    let map = QuotientBallMap::new(unwrapped.clone(), quotient.clone());
    let ball = EmbeddedBall::new(unwrapped.capacity(), Arc::new(map))?;
    Ok(ZEmbedding {
        variant,
        big,
        small,
        skeleton,
        g,
        unwrapped,
        strip,
        quotient,
        ball,
        energy,
        eps,
        precondition_margin: margin,
    })
}

/// The square translation of `B²(c)` followed by the assembly.
pub fn z_pipeline(variant: ZVariant, c: f64, eps: f64) -> Result<(SquareTranslation, ZEmbedding)> {
    let st = square_translation(c, 2.0 * c, SquareOptions::default())?;
    let z = assemble_z_embedding(&st.seed, &st.hypersurface(), variant, c, eps, ZOptions::default())?;
    Ok((st, z))
}

impl ZEmbedding {
    /// `A + ε` with `A = e + (C − c)`.
    pub fn cylinder_capacity(&self) -> f64 {
        self.strip.area + self.eps
    }

    pub fn tightness(&self) -> f64 {
        self.ball.capacity() / self.cylinder_capacity()
    }

    /// Counts preimages of sampled image points over all strip translates;
    /// more than one means the pieces overlap.
    pub fn check_overlaps(&self, samples: usize, seed: u64) -> Result<OverlapReport> {
        let qm = QuotientBallMap::new(self.unwrapped.clone(), self.quotient.clone());
        let pts = self.ball.domain_samples(self.ball.capacity(), samples, seed, 0.0)?;
        let mut rep = OverlapReport {
            samples: pts.len(),
            max_preimages: 0,
            unresolved: 0,
        };
        for p in &pts {
            let n = qm.preimages(&qm.eval(p)).len();
            if n == 0 {
                rep.unresolved += 1;
            }
            rep.max_preimages = rep.max_preimages.max(n);
        }
        if rep.max_preimages > 1 {
            return Err(Error::construction(format!(
                "pieces overlap: a point has {} preimages",
                rep.max_preimages
            )));
        }
        Ok(rep)
    }

    /// Largest `π|w|²` of the planar factor over sampled image points.
    pub fn max_planar_level(&self, samples: usize, seed: u64) -> Result<f64> {
        let d = self.ball.map.dim_out();
        Ok(self
            .ball
            .image_samples(self.ball.capacity(), samples, seed)?
            .iter()
            .map(|y| PI * (y[d - 2] * y[d - 2] + y[d - 1] * y[d - 1]))
            .fold(0.0, f64::max))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_translation_energy_and_disjunction() {
        let st = square_translation(1.0, 2.0, SquareOptions::default()).unwrap();
        assert!(st.energy <= 1.02, "{}", st.energy);
        assert!(st.energy >= 1.0);
        let rep = st.disjunction(2000, 1).unwrap();
        assert!(rep.disjoint, "{rep:?}");
        let h = st.isotopy.hamiltonian_ref().unwrap();
        let grid = hofer_energy_upper(h, &EnergyGrid::default());
        assert!((grid.value - st.energy).abs() < 1e-9 * st.energy, "{grid:?}");
    }

    #[test]
    fn sheared_gradient_matches_differences() {
        let st = square_translation(1.0, 2.0, SquareOptions::default()).unwrap();
        let h = st.isotopy.hamiltonian_ref().unwrap();
        for x in [[2.03, 0.2], [2.031, 0.3], [0.0, 0.01], [3.0, 0.4]] {
            let a = h.field.gradient(&x, 0.5);
            let b = crate::hamiltonian::fd_gradient(|y| h.value(y, 0.5), &x);
            assert!((a[0] - b[0]).abs() + (a[1] - b[1]).abs() < 1e-4 * (1.0 + a[0].abs() + a[1].abs()), "{x:?}: {a:?} {b:?}");
        }
    }

    #[test]
    fn z_ball_is_tight_and_injective() {
        let (_, mut z) = z_pipeline(ZVariant::Z, 1.0, 0.01).unwrap();
        assert!(z.tightness() >= 0.95, "{}", z.tightness());
        assert!(z.ball.capacity() <= z.cylinder_capacity());
        let ov = z.check_overlaps(400, 3).unwrap();
        assert_eq!(ov.max_preimages, 1, "{ov:?}");
        assert!(z.max_planar_level(1000, 5).unwrap() < z.cylinder_capacity());
        let rep = z.ball.verify(1000, 2).unwrap();
        assert!(rep.max_defect < 1e-6, "{rep:?}");
    }

    #[test]
    fn w_variant_capacities() {
        let (_, z) = z_pipeline(ZVariant::W, 1.0, 0.01).unwrap();
        assert!((z.ball.capacity() - 0.999).abs() < 1e-12);
        assert!((z.cylinder_capacity() - (z.energy + 0.5 + 0.01)).abs() < 1e-12);
    }

    #[test]
    fn flat_hypersurface_fails_precondition() {
        let st = square_translation(1.0, 2.0, SquareOptions::default()).unwrap();
        let flat = GraphHypersurface::new(TimeDepHamiltonian::zero(2));
        let err = assemble_z_embedding(&st.seed, &flat, ZVariant::Z, 1.0, 0.01, ZOptions::default());
        assert!(matches!(err, Err(Error::Input(_))));
    }
}

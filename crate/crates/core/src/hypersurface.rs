//! Graph hypersurfaces `Q = {(x, t, −H(x, t))} ⊂ ℝ²ᵐ × [0, 1] × ℝ` with the
//! form `ω + dt∧dz`, their characteristics, monodromy and energy.
//!
//! Characteristics are integrated from the kernel of the pulled-back form
//! `ω − dt∧d_xH`, found by a linear solve at every stage; this route shares
//! nothing with the Hamiltonian flow beyond the values of `H`.

use std::fmt::Write as _;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ball::EmbeddedBall;
use crate::error::{check_dim, Error, Result};
use crate::hamiltonian::{fd_gradient, EnergyGrid, TimeDepHamiltonian};
use crate::integrate::{dopri5_with, IntegratorSettings};
use crate::map::SmoothMap;
use crate::region::SharedRegion;
use crate::symplectic::{capacity_level, omega_matrix};

#[derive(Clone, Debug)]
pub struct GraphHypersurface {
    pub hamiltonian: TimeDepHamiltonian,
    pub settings: IntegratorSettings,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CharacteristicPoint {
    pub t: f64,
    pub x: Vec<f64>,
    pub z: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Characteristic {
    pub x0: Vec<f64>,
    pub points: Vec<CharacteristicPoint>,
}

impl Characteristic {
    pub fn endpoint(&self) -> &CharacteristicPoint {
        self.points.last().expect("characteristics have at least one point")
    }

    /// `max_t |z(t) + H(x(t), t)|`.
    pub fn graph_defect(&self, h: &TimeDepHamiltonian) -> f64 {
        self.points
            .iter()
            .map(|p| (p.z + h.value(&p.x, p.t)).abs())
            .fold(0.0, f64::max)
    }

    /// CSV with header `t,x1,y1,…,z`.
    pub fn to_csv(&self) -> String {
        let n = self.x0.len() / 2;
        let mut out = String::from("t");
        for i in 1..=n {
            let _ = write!(out, ",x{i},y{i}");
        }
        out.push_str(",z\n");
        for p in &self.points {
            let _ = write!(out, "{}", p.t);
            for v in &p.x {
                let _ = write!(out, ",{v}");
            }
            let _ = writeln!(out, ",{}", p.z);
        }
        out
    }
}

impl GraphHypersurface {
    /// Leaves are integrated at tolerance `1e−11`, tighter than flows, so the
    /// graph identity `z = −H` holds to `1e−8` along them.
    pub fn new(hamiltonian: TimeDepHamiltonian) -> Self {
        Self {
            hamiltonian,
            settings: IntegratorSettings {
                tol: 1e-11,
                ..IntegratorSettings::default()
            },
        }
    }

    pub fn dim(&self) -> usize {
        self.hamiltonian.dim()
    }

    /// `Φ(x, t) = (x, t, −H(x, t))`.
    pub fn embed(&self, x: &[f64], t: f64) -> Vec<f64> {
        let mut out = x.to_vec();
        out.push(t);
        out.push(-self.hamiltonian.value(x, t));
        out
    }

    /// `Q` read in the opposite direction: the graph of `−H̄`,
    /// `H̄(x, t) = −H(x, 1 − t)`.
    pub fn reversed(&self) -> Self {
        Self {
            hamiltonian: self.hamiltonian.reversed(),
            settings: self.settings,
        }
    }

    /// Largest `|H|` over the samples at times within `radius` of the ends.
    pub fn end_defect(&self, xs: &[Vec<f64>], radius: f64) -> f64 {
        let times: Vec<f64> = (0..=10)
            .flat_map(|k| {
                let r = radius * k as f64 / 10.0;
                [r, 1.0 - r]
            })
            .collect();
        xs.iter()
            .flat_map(|x| times.iter().map(move |&t| (x, t)))
            .map(|(x, t)| self.hamiltonian.value(x, t).abs())
            .fold(0.0, f64::max)
    }

    /// Kernel direction `(k_x, 1)` of the pulled-back form at `(x, t)`.
    fn kernel(&self, x: &[f64], t: f64) -> Result<Vec<f64>> {
        let d = x.len();
        let grad = fd_gradient(|y| self.hamiltonian.value(y, t), x);
        let mut m = DMatrix::zeros(d + 1, d + 1);
        m.view_mut((0, 0), (d, d)).copy_from(&omega_matrix(d));
        for i in 0..d {
            m[(i, d)] = grad[i];
            m[(d, i)] = -grad[i];
        }
        // Solve the first d rows of M (k, 1)ᵀ = 0 for k.
        let a = m.view((0, 0), (d, d)).into_owned();
        let b = DVector::from_iterator(d, (0..d).map(|i| -m[(i, d)]));
        let k = a
            .lu()
            .solve(&b)
            .ok_or_else(|| Error::numeric("degenerate pulled-back form", x))?;
        if k.iter().any(|v| !v.is_finite()) {
            return Err(Error::numeric("non-finite characteristic direction", x));
        }
        Ok(k.iter().copied().collect())
    }

    fn time_deriv(&self, x: &[f64], t: f64) -> f64 {
        let h = 1e-5;
        let f = |s: f64| self.hamiltonian.value(x, s);
        (8.0 * (f(t + 0.5 * h) - f(t - 0.5 * h)) - (f(t + h) - f(t - h))) / (6.0 * h)
    }

    fn rhs(&self, t: f64, state: &[f64]) -> Result<Vec<f64>> {
        let d = state.len() - 1;
        let x = &state[..d];
        let mut out = self.kernel(x, t)?;
        out.push(-self.time_deriv(x, t));
        Ok(out)
    }

    pub fn characteristic_through(&self, x0: &[f64]) -> Result<Characteristic> {
        characteristic_through(self, x0)
    }

    pub fn monodromy(&self, domain: SharedRegion) -> Monodromy {
        Monodromy {
            surface: self.clone(),
            domain,
        }
    }
}

/// Leaf of the characteristic foliation from `(x0, 0, 0)` to `t = 1`.
pub fn characteristic_through(q: &GraphHypersurface, x0: &[f64]) -> Result<Characteristic> {
    check_dim(q.dim(), x0.len())?;
    let d = x0.len();
    let mut start = x0.to_vec();
    start.push(-q.hamiltonian.value(x0, 0.0));
    let mut points = Vec::new();
    dopri5_with(|t, y| q.rhs(t, y), 0.0, 1.0, &start, &q.settings, |t, y| {
        points.push(CharacteristicPoint {
            t,
            x: y[..d].to_vec(),
            z: y[d],
        })
    })?;
    Ok(Characteristic {
        x0: x0.to_vec(),
        points,
    })
}

/// End-to-end map of the characteristic foliation.
#[derive(Clone)]
pub struct Monodromy {
    pub surface: GraphHypersurface,
    pub domain: SharedRegion,
}

impl SmoothMap for Monodromy {
    fn dim_in(&self) -> usize {
        self.surface.dim()
    }

    fn dim_out(&self) -> usize {
        self.surface.dim()
    }

    fn domain(&self) -> SharedRegion {
        self.domain.clone()
    }

    fn eval(&self, p: &[f64]) -> Vec<f64> {
        match characteristic_through(&self.surface, p) {
            Ok(c) => c.endpoint().x.clone(),
            Err(_) => vec![f64::NAN; p.len()],
        }
    }

    fn inverse(&self, q: &[f64]) -> Option<Vec<f64>> {
        characteristic_through(&self.surface.reversed(), q)
            .ok()
            .map(|c| c.endpoint().x.clone())
    }

    fn name(&self) -> String {
        format!("monodromy of graph of −({})", self.surface.hamiltonian.field.describe())
    }
}

pub fn monodromy(q: &GraphHypersurface, domain: SharedRegion) -> Monodromy {
    q.monodromy(domain)
}

/// `e(Q)`: length of the smallest interval containing the sampled `z = −H`.
pub fn hypersurface_energy(q: &GraphHypersurface, grid: &EnergyGrid) -> f64 {
    let h = &q.hamiltonian;
    let d = h.dim();
    let k = grid.per_axis;
    let total = k.pow(d as u32);
    let times: Vec<f64> = (0..grid.time_points)
        .map(|j| j as f64 / (grid.time_points - 1).max(1) as f64)
        .collect();
    let (lo, hi) = (0..total)
        .into_par_iter()
        .map(|mut idx| {
            let x: Vec<f64> = (0..d)
                .map(|i| {
                    let j = idx % k;
                    idx /= k;
                    h.support_lo[i] + (h.support_hi[i] - h.support_lo[i]) * j as f64 / (k - 1).max(1) as f64
                })
                .collect();
            times.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &t| {
                let z = -h.value(&x, t);
                (lo.min(z), hi.max(z))
            })
        })
        .reduce(|| (f64::INFINITY, f64::NEG_INFINITY), |a, b| (a.0.min(b.0), a.1.max(b.1)));
    hi - lo
}

/// A compact set given by sample points and a margin, optionally with an
/// exact membership test.
#[derive(Clone)]
pub struct SampledSet {
    pub points: Vec<Vec<f64>>,
    pub margin: f64,
    pub region: Option<SharedRegion>,
}

impl SampledSet {
    /// Distance from `q` to the nearest sample minus the margin; `−∞` when
    /// the exact membership test says `q` is inside.
    pub fn clearance(&self, q: &[f64]) -> f64 {
        if let Some(r) = &self.region {
            if r.contains(q) {
                return f64::NEG_INFINITY;
            }
        }
        let d2 = self
            .points
            .iter()
            .map(|p| p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum::<f64>())
            .fold(f64::INFINITY, f64::min);
        d2.sqrt() - self.margin
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypersurfaceDisjunction {
    pub min_clearance: f64,
    pub worst_point: Vec<f64>,
    pub samples: usize,
    pub passed: bool,
}

/// `Q` disjoins `A` when every sampled leaf starting over `A` ends outside
/// the margin-enlargement of `A`.
pub fn disjoins(q: &GraphHypersurface, a: &SampledSet) -> Result<HypersurfaceDisjunction> {
    let res: Vec<Result<(f64, Vec<f64>)>> = a
        .points
        .par_iter()
        .map(|p| {
            let end = characteristic_through(q, p)?.endpoint().x.clone();
            Ok((a.clearance(&end), p.clone()))
        })
        .collect();
    let mut out = HypersurfaceDisjunction {
        min_clearance: f64::INFINITY,
        worst_point: Vec::new(),
        samples: a.points.len(),
        passed: false,
    };
    for r in res {
        let (c, p) = r?;
        if c < out.min_clearance || out.worst_point.is_empty() {
            out.min_clearance = c;
            out.worst_point = p;
        }
    }
    out.passed = out.min_clearance > 0.0;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProperDisjunction {
    /// Smallest `level − c` of sampled `φ(B(c))` against the ball itself.
    pub margin_ball: f64,
    /// Smallest `level − 2c` against the extension.
    pub margin_extension: f64,
    pub disjoins: bool,
    pub properly: bool,
}

/// Checks `φ(B(c)) ∩ B(2c) = ∅` on samples, `φ` the monodromy of `Q`.
pub fn properly_disjoins(
    q: &GraphHypersurface,
    ball: &EmbeddedBall,
    extension: &EmbeddedBall,
    samples: usize,
    seed: u64,
) -> Result<ProperDisjunction> {
    let c = ball.capacity();
    if (extension.capacity() - 2.0 * c).abs() > 1e-9 * c {
        return Err(Error::input(format!(
            "extension capacity {} is not twice {c}",
            extension.capacity()
        )));
    }
    let dom = ball.domain_samples(c, samples.min(200), seed, 0.0)?;
    for p in &dom {
        let (a, b) = (ball.map.eval(p), extension.map.eval(p));
        if a.iter().zip(&b).any(|(x, y)| (x - y).abs() > 1e-9) {
            return Err(Error::input(format!("extension does not restrict to the ball at {p:?}")));
        }
    }
    let pts = ball.image_samples(c, samples, seed)?;
    let ends: Vec<Result<Vec<f64>>> = pts
        .par_iter()
        .map(|p| Ok(characteristic_through(q, p)?.endpoint().x.clone()))
        .collect();
    let (mut mb, mut me) = (f64::INFINITY, f64::INFINITY);
    for e in ends {
        let e = e?;
        mb = mb.min(ball.exterior_margin_of(&e, c));
        me = me.min(extension.exterior_margin_of(&e, 2.0 * c));
    }
    Ok(ProperDisjunction {
        margin_ball: mb,
        margin_extension: me,
        disjoins: mb > 0.0,
        properly: me > 0.0,
    })
}

/// Euclidean ball `{π|x − center|² < capacity}` as a region.
pub fn round_ball_region(center: Vec<f64>, capacity: f64) -> SharedRegion {
    let r = (capacity / std::f64::consts::PI).sqrt();
    let lo = center.iter().map(|c| c - r).collect();
    let hi = center.iter().map(|c| c + r).collect();
    Arc::new(crate::region::PredicateRegion {
        lo,
        hi,
        predicate: Arc::new(move |p| capacity_level(p, &center) < capacity),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::{random_bump_hamiltonian, HamiltonianFlags, StripTranslation};
    use crate::isotopy::Isotopy;
    use crate::map::identity;
    use crate::region::BallRegion;
    use crate::smooth::PeriodicBump;

    fn strip_surface(nu: f64) -> GraphHypersurface {
        let st = StripTranslation::new(2, 0, nu, -1.0, 1.0, 0.05, Some(0.1)).unwrap();
        let h = TimeDepHamiltonian::new(Arc::new(st), vec![-3.0, -1.1], vec![3.0, 1.2], HamiltonianFlags::default()).unwrap();
        GraphHypersurface::new(h)
    }

    #[test]
    fn flat_surface_has_straight_leaves() {
        let q = GraphHypersurface::new(TimeDepHamiltonian::zero(2));
        let c = q.characteristic_through(&[0.4, -0.2]).unwrap();
        assert!(c.points.iter().all(|p| p.x == vec![0.4, -0.2] && p.z == 0.0));
        assert_eq!(c.endpoint().t, 1.0);
    }

    #[test]
    fn strip_leaf_displacement() {
        let q = strip_surface(2.0);
        let c = q.characteristic_through(&[0.0, 0.3]).unwrap();
        let h = PeriodicBump::new(0.1);
        let n = 200_000;
        let quad: f64 = (0..n).map(|k| h.value((k as f64 + 0.5) / n as f64)).sum::<f64>() / n as f64;
        assert!((c.endpoint().x[0] - 2.0 * quad).abs() < 1e-7);
        let gd = c.graph_defect(&q.hamiltonian);
        assert!(gd < 1e-8, "{gd}");
        let csv = c.to_csv();
        assert!(csv.starts_with("t,x1,y1,z\n"));
    }

    #[test]
    fn monodromy_matches_flow_and_reverses() {
        let h = random_bump_hamiltonian(2, 4, 17);
        let q = GraphHypersurface::new(h.clone());
        let iso = Isotopy::hamiltonian(h);
        let dom: SharedRegion = Arc::new(BallRegion::new(2, 1.0));
        let mono = q.monodromy(dom);
        for k in 0..20 {
            let p = [0.5 * (k as f64 * 0.7).sin(), 0.5 * (k as f64 * 1.3).cos()];
            let a = mono.eval(&p);
            let b = iso.flow_adaptive(&p, 0.0, 1.0).unwrap();
            assert!((a[0] - b[0]).abs() < 1e-6 && (a[1] - b[1]).abs() < 1e-6);
            let back = mono.inverse(&a).unwrap();
            assert!((back[0] - p[0]).abs() < 1e-6 && (back[1] - p[1]).abs() < 1e-6);
        }
    }

    #[test]
    fn energy_is_oscillation() {
        let q = strip_surface(1.0);
        let grid = EnergyGrid { per_axis: 93, time_points: 51 };
        let e = hypersurface_energy(&q, &grid);
        assert!((e - 2.05).abs() < 1e-9, "{e}");
        let hof = crate::hamiltonian::hofer_energy_upper(&q.hamiltonian, &grid).value;
        assert_eq!(e, hof);
        let doubled = GraphHypersurface::new(q.hamiltonian.scaled(2.0));
        assert!((hypersurface_energy(&doubled, &grid) - 2.0 * e).abs() < 1e-12);
        let rev = q.reversed();
        assert!((hypersurface_energy(&rev, &grid) - e).abs() < 1e-12);
    }

    fn disc_points(capacity: f64, center: [f64; 2]) -> Vec<Vec<f64>> {
        let r = (capacity / std::f64::consts::PI).sqrt();
        (0..200)
            .map(|k| {
                let a = k as f64 * 2.399963;
                let rho = r * ((k as f64 + 0.5) / 200.0).sqrt();
                vec![center[0] + rho * a.cos(), center[1] + rho * a.sin()]
            })
            .collect()
    }

    #[test]
    fn disjunction_of_a_disc() {
        let q = strip_surface(2.0);
        let a = SampledSet {
            points: disc_points(1.0, [0.0, 0.0]),
            margin: 0.01,
            region: Some(round_ball_region(vec![0.0, 0.0], 1.0)),
        };
        assert!(disjoins(&q, &a).unwrap().passed);
        let flat = GraphHypersurface::new(TimeDepHamiltonian::zero(2));
        assert!(!disjoins(&flat, &a).unwrap().passed);
    }

    fn round_ball(capacity: f64) -> EmbeddedBall {
        EmbeddedBall::new(capacity, Arc::new(identity(Arc::new(BallRegion::new(2, capacity))))).unwrap()
    }

    #[test]
    fn proper_disjunction_radii() {
        let (b, ext) = (round_ball(0.5), round_ball(1.0));
        let r1 = (0.5 / std::f64::consts::PI).sqrt();
        let r2 = (1.0 / std::f64::consts::PI).sqrt();
        let shift = |d: f64| {
            // Speed chosen so the core displacement is exactly d.
            let nu = d / PeriodicBump::new(0.1).period_integral();
            let st = StripTranslation::new(2, 0, nu, -1.0, 1.0, 0.05, Some(0.1)).unwrap();
            let h = TimeDepHamiltonian::new(Arc::new(st), vec![-3.0, -1.1], vec![3.0, 1.2], HamiltonianFlags::default()).unwrap();
            GraphHypersurface::new(h)
        };
        let far = properly_disjoins(&shift(r1 + r2 + 0.05), &b, &ext, 300, 1).unwrap();
        assert!(far.disjoins && far.properly);
        let mid = properly_disjoins(&shift(0.5 * (2.0 * r1 + r1 + r2)), &b, &ext, 300, 1).unwrap();
        assert!(mid.disjoins && !mid.properly);
        let flat = GraphHypersurface::new(TimeDepHamiltonian::zero(2));
        let none = properly_disjoins(&flat, &b, &ext, 300, 1).unwrap();
        assert!(!none.disjoins && !none.properly);
        assert!(properly_disjoins(&flat, &b, &round_ball(0.9), 10, 1).is_err());
    }
}

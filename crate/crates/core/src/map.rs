//! Numerically evaluable maps between Euclidean regions, and the
//! finite-difference symplecticity verifier used throughout the crate.

use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::region::{Region, SharedRegion};
use crate::symplectic::omega_matrix;

pub trait SmoothMap: Send + Sync {
    fn dim_in(&self) -> usize;

    fn dim_out(&self) -> usize;

    fn domain(&self) -> SharedRegion;

    fn eval(&self, p: &[f64]) -> Vec<f64>;

    /// Closed-form Jacobian, when the map has one.
    fn jacobian(&self, _p: &[f64]) -> Option<DMatrix<f64>> {
        None
    }

    /// Preimage of `q` when `q` is in the image and the map knows how to
    /// invert itself there; `None` otherwise.
    fn inverse(&self, _q: &[f64]) -> Option<Vec<f64>> {
        None
    }

    fn name(&self) -> String {
        "map".into()
    }
}

pub type SharedMap = Arc<dyn SmoothMap>;

type EvalFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
type JacFn = Arc<dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync>;
type InvFn = Arc<dyn Fn(&[f64]) -> Option<Vec<f64>> + Send + Sync>;

/// A map assembled from closures.
#[derive(Clone)]
pub struct FnMap {
    name: String,
    dim_in: usize,
    dim_out: usize,
    domain: SharedRegion,
    eval: EvalFn,
    jac: Option<JacFn>,
    inv: Option<InvFn>,
}

impl FnMap {
    pub fn new(
        name: impl Into<String>,
        domain: SharedRegion,
        dim_out: usize,
        eval: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            dim_in: domain.dim(),
            dim_out,
            domain,
            eval: Arc::new(eval),
            jac: None,
            inv: None,
        }
    }

    pub fn with_jacobian(mut self, jac: impl Fn(&[f64]) -> DMatrix<f64> + Send + Sync + 'static) -> Self {
        self.jac = Some(Arc::new(jac));
        self
    }

    pub fn with_inverse(mut self, inv: impl Fn(&[f64]) -> Option<Vec<f64>> + Send + Sync + 'static) -> Self {
        self.inv = Some(Arc::new(inv));
        self
    }
}

impl SmoothMap for FnMap {
    fn dim_in(&self) -> usize {
        self.dim_in
    }

    fn dim_out(&self) -> usize {
        self.dim_out
    }

    fn domain(&self) -> SharedRegion {
        self.domain.clone()
    }

    fn eval(&self, p: &[f64]) -> Vec<f64> {
        (self.eval)(p)
    }

    fn jacobian(&self, p: &[f64]) -> Option<DMatrix<f64>> {
        self.jac.as_ref().map(|j| j(p))
    }

    fn inverse(&self, q: &[f64]) -> Option<Vec<f64>> {
        self.inv.as_ref().and_then(|f| f(q))
    }

    fn name(&self) -> String {
        self.name.clone()
    }
}

/// Linear map `p ↦ A p + b` on a given domain.
pub fn affine(name: &str, domain: SharedRegion, a: DMatrix<f64>, b: Vec<f64>) -> FnMap {
    let a2 = a.clone();
    let b2 = b.clone();
    let inv = a.clone().try_inverse();
    let dim_out = a.nrows();
    FnMap::new(name, domain, dim_out, move |p| {
        let v = &a * nalgebra::DVector::from_column_slice(p);
        v.iter().zip(&b).map(|(x, y)| x + y).collect()
    })
    .with_jacobian(move |_| a2.clone())
    .with_inverse(move |q| {
        let inv = inv.as_ref()?;
        let shifted: Vec<f64> = q.iter().zip(&b2).map(|(x, y)| x - y).collect();
        Some((inv * nalgebra::DVector::from_column_slice(&shifted)).iter().copied().collect())
    })
}

pub fn identity(domain: SharedRegion) -> FnMap {
    let d = domain.dim();
    affine("identity", domain, DMatrix::identity(d, d), vec![0.0; d])
}

/// `outer ∘ inner`; the domain is the inner map's.
#[derive(Clone)]
pub struct Compose {
    pub outer: SharedMap,
    pub inner: SharedMap,
}

impl SmoothMap for Compose {
    fn dim_in(&self) -> usize {
        self.inner.dim_in()
    }

    fn dim_out(&self) -> usize {
        self.outer.dim_out()
    }

    fn domain(&self) -> SharedRegion {
        self.inner.domain()
    }

    fn eval(&self, p: &[f64]) -> Vec<f64> {
        self.outer.eval(&self.inner.eval(p))
    }

    fn jacobian(&self, p: &[f64]) -> Option<DMatrix<f64>> {
        let ji = self.inner.jacobian(p)?;
        let jo = self.outer.jacobian(&self.inner.eval(p))?;
        Some(jo * ji)
    }

    fn inverse(&self, q: &[f64]) -> Option<Vec<f64>> {
        self.inner.inverse(&self.outer.inverse(q)?)
    }

    fn name(&self) -> String {
        format!("{} ∘ {}", self.outer.name(), self.inner.name())
    }
}

pub fn compose(outer: SharedMap, inner: SharedMap) -> Result<Compose> {
    check_dim(outer.dim_in(), inner.dim_out())?;
    Ok(Compose { outer, inner })
}

/// Product map acting factorwise on concatenated coordinates.
#[derive(Clone)]
pub struct ProductMap {
    pub factors: Vec<SharedMap>,
}

impl ProductMap {
    fn split<'a>(&self, p: &'a [f64], by_input: bool) -> Vec<&'a [f64]> {
        let mut out = Vec::with_capacity(self.factors.len());
        let mut offset = 0;
        for f in &self.factors {
            let d = if by_input { f.dim_in() } else { f.dim_out() };
            out.push(&p[offset..offset + d]);
            offset += d;
        }
        out
    }
}

impl SmoothMap for ProductMap {
    fn dim_in(&self) -> usize {
        self.factors.iter().map(|f| f.dim_in()).sum()
    }

    fn dim_out(&self) -> usize {
        self.factors.iter().map(|f| f.dim_out()).sum()
    }

    fn domain(&self) -> SharedRegion {
        Arc::new(crate::region::ProductRegion::new(
            self.factors.iter().map(|f| f.domain()).collect(),
        ))
    }

    fn eval(&self, p: &[f64]) -> Vec<f64> {
        self.factors
            .iter()
            .zip(self.split(p, true))
            .flat_map(|(f, x)| f.eval(x))
            .collect()
    }

    fn jacobian(&self, p: &[f64]) -> Option<DMatrix<f64>> {
        let mut j = DMatrix::zeros(self.dim_out(), self.dim_in());
        let (mut r, mut c) = (0, 0);
        for (f, x) in self.factors.iter().zip(self.split(p, true)) {
            let jf = f.jacobian(x)?;
            j.view_mut((r, c), (jf.nrows(), jf.ncols())).copy_from(&jf);
            r += jf.nrows();
            c += jf.ncols();
        }
        Some(j)
    }

    fn inverse(&self, q: &[f64]) -> Option<Vec<f64>> {
        let mut out = Vec::with_capacity(self.dim_in());
        for (f, y) in self.factors.iter().zip(self.split(q, false)) {
            out.extend(f.inverse(y)?);
        }
        Some(out)
    }

    fn name(&self) -> String {
        self.factors.iter().map(|f| f.name()).collect::<Vec<_>>().join(" × ")
    }
}

/// Default finite-difference step: `1e−5 × domain diameter`.
pub fn default_step(domain: &dyn Region) -> f64 {
    1e-5 * domain.diameter()
}

/// Step for comparing closed-form Jacobians of sharply bent maps against
/// differences: `1e−8 × domain diameter`.
pub fn fine_step(domain: &dyn Region) -> f64 {
    1e-8 * domain.diameter()
}

/// Fourth-order central-difference Jacobian with half steps `step/2` and
/// `step`, so every evaluation stays within `step` of `p`.
pub fn fd_jacobian(f: &dyn SmoothMap, p: &[f64], step: f64) -> Result<DMatrix<f64>> {
    check_dim(f.dim_in(), p.len())?;
    fd_jacobian_fn(|q| f.eval(q), p, f.dim_out(), step)
        .map_err(|_| Error::numeric(format!("non-finite derivative of {}", f.name()), p))
}

/// [`fd_jacobian`] for a bare closure.
pub fn fd_jacobian_fn(f: impl Fn(&[f64]) -> Vec<f64>, p: &[f64], dim_out: usize, step: f64) -> Result<DMatrix<f64>> {
    let mut j = DMatrix::zeros(dim_out, p.len());
    let mut q = p.to_vec();
    let mut at = |k: usize, offset: f64| {
        q[k] = p[k] + offset;
        let v = f(&q);
        q[k] = p[k];
        v
    };
    for k in 0..p.len() {
        let (p1, m1) = (at(k, step), at(k, -step));
        let (p2, m2) = (at(k, 0.5 * step), at(k, -0.5 * step));
        for i in 0..dim_out {
            let d = (8.0 * (p2[i] - m2[i]) - (p1[i] - m1[i])) / (6.0 * step);
            if !d.is_finite() {
                return Err(Error::numeric("non-finite derivative", p));
            }
            j[(i, k)] = d;
        }
    }
    Ok(j)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum JacobianSource {
    FiniteDifference,
    Analytic,
    /// Analytic when the map provides it, finite differences otherwise.
    Auto,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DefectReport {
    pub max_defect: f64,
    pub worst_point: Vec<f64>,
    pub samples: usize,
    pub step: f64,
}

fn defect_at(j: &DMatrix<f64>, om_dom: &DMatrix<f64>, om_cod: &DMatrix<f64>) -> f64 {
    let d = j.transpose() * om_cod * j - om_dom;
    d.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

fn validate_samples(f: &dyn SmoothMap, samples: &[Vec<f64>], step: f64) -> Result<()> {
    let dom = f.domain();
    for p in samples {
        check_dim(f.dim_in(), p.len())?;
        if !dom.contains_with_margin(p, step) {
            return Err(Error::input(format!("sample {p:?} outside the domain of {}", f.name())));
        }
    }
    Ok(())
}

/// `max_p ‖J(p)ᵀ Ω_cod J(p) − Ω_dom‖_∞` over the samples.
pub fn pullback_defect(f: &dyn SmoothMap, samples: &[Vec<f64>], step: f64) -> Result<DefectReport> {
    pullback_defect_with(f, samples, step, JacobianSource::FiniteDifference)
}

pub fn pullback_defect_with(
    f: &dyn SmoothMap,
    samples: &[Vec<f64>],
    step: f64,
    source: JacobianSource,
) -> Result<DefectReport> {
    if !f.dim_in().is_multiple_of(2) || !f.dim_out().is_multiple_of(2) {
        return Err(Error::input("pullback defect needs even-dimensional domain and codomain"));
    }
    validate_samples(f, samples, step)?;
    let om_dom = omega_matrix(f.dim_in());
    let om_cod = omega_matrix(f.dim_out());
    let per_sample: Vec<Result<f64>> = samples
        .par_iter()
        .map(|p| {
            let j = match source {
                JacobianSource::FiniteDifference => fd_jacobian(f, p, step)?,
                JacobianSource::Analytic => f
                    .jacobian(p)
                    .ok_or_else(|| Error::input(format!("{} has no analytic jacobian", f.name())))?,
                JacobianSource::Auto => match f.jacobian(p) {
                    Some(j) => j,
                    None => fd_jacobian(f, p, step)?,
                },
            };
            let value = f.eval(p);
            if value.iter().any(|v| !v.is_finite()) {
                return Err(Error::numeric(format!("non-finite value of {}", f.name()), p));
            }
            Ok(defect_at(&j, &om_dom, &om_cod))
        })
        .collect();
    let mut report = DefectReport {
        max_defect: 0.0,
        worst_point: Vec::new(),
        samples: samples.len(),
        step,
    };
    for (p, r) in samples.iter().zip(per_sample) {
        let d = r?;
        if report.worst_point.is_empty() || d > report.max_defect {
            report.max_defect = d;
            report.worst_point = p.clone();
        }
    }
    Ok(report)
}

/// Largest relative disagreement between the analytic and central-difference
/// Jacobians over the samples.
pub fn jacobian_agreement(f: &dyn SmoothMap, samples: &[Vec<f64>], step: f64) -> Result<f64> {
    validate_samples(f, samples, step)?;
    let worst: Vec<Result<f64>> = samples
        .par_iter()
        .map(|p| {
            let ja = f
                .jacobian(p)
                .ok_or_else(|| Error::input(format!("{} has no analytic jacobian", f.name())))?;
            let jf = fd_jacobian(f, p, step)?;
            let scale = ja.iter().fold(1.0_f64, |m, x| m.max(x.abs()));
            Ok((ja - jf).iter().fold(0.0_f64, |m, x| m.max(x.abs())) / scale)
        })
        .collect();
    worst.into_iter().try_fold(0.0_f64, |m, r| Ok(m.max(r?)))
}

/// Largest `|det J − 1|` of a planar map over the samples (finite differences).
pub fn area_defect(f: &dyn SmoothMap, samples: &[Vec<f64>], step: f64) -> Result<f64> {
    if f.dim_in() != 2 || f.dim_out() != 2 {
        return Err(Error::input("area defect is defined for planar maps"));
    }
    validate_samples(f, samples, step)?;
    let dets: Vec<Result<f64>> = samples
        .par_iter()
        .map(|p| Ok((fd_jacobian(f, p, step)?.determinant() - 1.0).abs()))
        .collect();
    dets.into_iter().try_fold(0.0_f64, |m, r| Ok(m.max(r?)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::region::BoxRegion;
    use crate::sampling::sample;

    fn plane() -> SharedRegion {
        Arc::new(BoxRegion::cube(2, 1.0))
    }

    fn diag(a: f64, b: f64) -> FnMap {
        affine("diag", plane(), DMatrix::from_row_slice(2, 2, &[a, 0.0, 0.0, b]), vec![0.0, 0.0])
    }

    #[test]
    fn defect_of_identity_and_unimodular_diagonal() {
        let s = sample(&*plane(), 200, 1).unwrap();
        let step = 1e-5;
        let s: Vec<_> = s.into_iter().map(|p| p.iter().map(|x| x * 0.9).collect()).collect();
        assert!(pullback_defect(&identity(plane()), &s, step).unwrap().max_defect <= 1e-9);
        assert!(pullback_defect(&diag(2.0, 0.5), &s, step).unwrap().max_defect <= 1e-9);
        let r = pullback_defect(&diag(2.0, 2.0), &s, step).unwrap();
        assert!((r.max_defect - 3.0).abs() < 1e-6);
    }

    #[test]
    fn defect_rejects_samples_outside_domain() {
        let err = pullback_defect(&identity(plane()), &[vec![2.0, 0.0]], 1e-5).unwrap_err();
        assert!(matches!(err, Error::Input(_)));
    }

    #[test]
    fn defect_reports_non_finite_point() {
        let f = FnMap::new("blowup", plane(), 2, |p| vec![1.0 / p[0], p[1]]);
        let err = pullback_defect(&f, &[vec![0.0, 0.1]], 1e-5).unwrap_err();
        match err {
            Error::Numeric { point, .. } => assert_eq!(point, vec![0.0, 0.1]),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn compose_and_product_jacobians() {
        let f: SharedMap = Arc::new(diag(2.0, 0.5));
        let g: SharedMap = Arc::new(diag(0.5, 2.0));
        let c = compose(f.clone(), g.clone()).unwrap();
        let j = c.jacobian(&[0.1, 0.2]).unwrap();
        assert!((j - DMatrix::<f64>::identity(2, 2)).norm() < 1e-15);
        let p = ProductMap { factors: vec![f, g] };
        assert_eq!(p.eval(&[1.0, 1.0, 1.0, 1.0]), vec![2.0, 0.5, 0.5, 2.0]);
        assert_eq!(p.inverse(&[2.0, 0.5, 0.5, 2.0]).unwrap(), vec![1.0, 1.0, 1.0, 1.0]);
    }
}

//! Executes a scenario: builds the construction, runs its checks and
//! collects the figures.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::ball::EmbeddedBall;
use crate::constructions::{
    compressing_pseudo_isotopy, lisa_ball_embedding, observe_global, regiso_family, regular_wrapped_ball, stretched_yn, translation_for_energy,
    unwrap_isotopy_family, unwrapped_ball, wrap_quotient, z_pipeline, EnergyLedger, FamilySettings, IsotopyFamily, WrapSettings, ZVariant,
};
use crate::error::{Error, Result};
use crate::hamiltonian::{hofer_energy_upper, EnergyGrid};
use crate::hypersurface::{hypersurface_energy, GraphHypersurface};
use crate::integrate::IntegratorSettings;
use crate::isotopy::{delta_regular_check, strictly_disjoins, strip_translation_isotopy, Isotopy};
use crate::map::{affine, SmoothMap};
use crate::profile::PolarRectangle;
use crate::region::BallRegion;
use crate::skeleton::{build_yn, PlanarSkeleton};
use crate::svg;

use super::report::{Basis, CheckRecord, Environment, Status, VerificationReport};
use super::scenario::{Construction, Scenario};

const SYMPLECTIC_TOL: f64 = 1e-6;
const FIGURE_SAMPLES: usize = 300;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Construct only.
    Build,
    /// Construct and run every check.
    Verify,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub samples: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Figure {
    pub file_name: String,
    pub contents: String,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub report: VerificationReport,
    pub figures: Vec<Figure>,
}

struct Ctx<'a> {
    mode: Mode,
    seed: u64,
    samples: usize,
    report: &'a mut VerificationReport,
    figures: &'a mut Vec<Figure>,
}

impl Ctx<'_> {
    fn verify(&self) -> bool {
        self.mode == Mode::Verify
    }

    fn figure(&mut self, name: &str, contents: String) {
        self.figures.push(Figure {
            file_name: name.into(),
            contents,
        });
    }

    fn defect(&mut self, name: &str, ball: &EmbeddedBall) -> Result<bool> {
        let mut b = ball.clone();
        let rep = b.verify(self.samples, self.seed)?;
        let c = CheckRecord::below(name, Basis::Oracle, rep.samples, SYMPLECTIC_TOL, rep.max_defect).at(rep.worst_point);
        let ok = c.passed;
        self.report.push(c);
        Ok(ok)
    }
}

/// Runs the scenario. Errors are folded into the report with status
/// `invalid` (input errors) or `error` (everything else).
pub fn run(scenario: &Scenario, mode: Mode, overrides: Overrides) -> RunOutput {
    let seed = overrides.seed.unwrap_or(scenario.seed());
    let samples = overrides.samples.unwrap_or(scenario.samples());
    let env = Environment {
        seed,
        samples,
        grid: None,
        integrator_tolerance: IntegratorSettings::default().tol,
        version: env!("CARGO_PKG_VERSION").into(),
    };
    let mut report = VerificationReport::new(&scenario.name, scenario.construction.kind(), env);
    let mut figures = Vec::new();
    let res = scenario.validate().and_then(|_| {
        let mut ctx = Ctx {
            mode,
            seed,
            samples,
            report: &mut report,
            figures: &mut figures,
        };
        execute(&scenario.construction, &mut ctx)
    });
    match res {
        Ok(()) => report.finish(),
        Err(e) => {
            report.status = match e {
                Error::Input(_) | Error::Json(_) => Status::Invalid,
                _ => Status::Error,
            };
            report.error = Some(e.to_string());
        }
    }
    RunOutput { report, figures }
}

/// Report for a scenario that failed to load.
pub fn invalid_report(name: &str, err: &Error) -> VerificationReport {
    let env = Environment {
        seed: 0,
        samples: 0,
        grid: None,
        integrator_tolerance: IntegratorSettings::default().tol,
        version: env!("CARGO_PKG_VERSION").into(),
    };
    let mut r = VerificationReport::new(name, "unknown", env);
    r.status = match err {
        Error::Io { .. } => Status::Error,
        _ => Status::Invalid,
    };
    r.error = Some(err.to_string());
    r
}

fn execute(c: &Construction, ctx: &mut Ctx) -> Result<()> {
    match c {
        Construction::Lisa { big, small, n, margin } => lisa(*big, *small, *n, *margin, ctx),
        Construction::ZAssembly { variant, c, eps } => {
            let v = if variant == "W" { ZVariant::W } else { ZVariant::Z };
            z_assembly(v, *c, *eps, ctx)
        }
        Construction::Unwrapped {
            kappa,
            n,
            nu,
            mu,
            hamiltonian,
        } => {
            let iso = match (nu, hamiltonian) {
                (Some(nu), _) => strip_translation_isotopy(*kappa, *nu, mu.unwrap_or(0.02))?,
                (None, Some(h)) => Isotopy::hamiltonian(h.build()?),
                (None, None) => return Err(Error::input("give exactly one of nu and hamiltonian")),
            };
            unwrapped(*kappa, *n, iso, ctx)
        }
        Construction::Wrapped {
            kappa,
            e,
            n,
            eps,
            counterfactual,
        } => wrapped(*kappa, *e, *n, *eps, *counterfactual, ctx),
        Construction::UnwrapFamily {
            lambda,
            eps,
            delta,
            n,
            points,
        } => unwrap_family(*lambda, *eps, *delta, *n, *points, ctx),
        Construction::RegisoFamily {
            lambda,
            eps,
            delta,
            n,
            points,
        } => regiso(*lambda, *eps, *delta, *n, *points, ctx),
        Construction::DisjunctionCertificate {
            hamiltonian,
            capacity,
            center,
            iterates,
            delta,
        } => {
            let h = hamiltonian.build()?;
            let center = center.clone().unwrap_or_else(|| vec![0.0; h.dim()]);
            disjunction(h, *capacity, center, *iterates, *delta, ctx)
        }
    }
}

fn sample_figure(ctx: &mut Ctx, name: &str, skel: &PlanarSkeleton, margin: f64, ball: &EmbeddedBall, title: &str) -> Result<()> {
    let pts = ball.image_samples(ball.capacity(), FIGURE_SAMPLES, ctx.seed)?;
    ctx.figure(name, svg::samples_svg(skel, margin, &pts, title));
    Ok(())
}

fn lisa(big: f64, small: f64, n: usize, margin: Option<f64>, ctx: &mut Ctx) -> Result<()> {
    let l = lisa_ball_embedding(big, small, n, margin)?;
    ctx.report.note("capacity", l.ball.capacity());
    ctx.report.note("margin", l.margin);
    ctx.figure("skeleton.svg", svg::skeleton_svg(&l.skeleton, l.margin, "Z skeleton"));
    sample_figure(ctx, "samples.svg", &l.skeleton, l.margin, &l.ball, "image samples")?;
    if !ctx.verify() {
        return Ok(());
    }
    ctx.defect("pullback defect", &l.ball)?;
    let f = l.fiber_check(ctx.samples, ctx.seed)?;
    let measured = f.max_fiber_capacity.max(f.max_sampled_level);
    ctx.report
        .push(CheckRecord::new("fibres over the far rectangle", Basis::Oracle, f.samples, f.bound, measured, f.passed));
    let inside = l.image_in_neighborhood(ctx.samples, ctx.seed)?;
    ctx.report.push(CheckRecord::new(
        "image inside the skeleton neighbourhood",
        Basis::Oracle,
        ctx.samples,
        0.0,
        if inside { 0.0 } else { 1.0 },
        inside,
    ));
    Ok(())
}

fn z_assembly(variant: ZVariant, c: f64, eps: f64, ctx: &mut Ctx) -> Result<()> {
    let (st, z) = z_pipeline(variant, c, eps)?;
    let mut ledger = EnergyLedger::new();
    ledger
        .push("translation", z.energy, "e")
        .push("rectangle", z.big - z.small, "C − c")
        .push("slack", z.eps, "ε");
    ctx.report.ledger = Some(ledger);
    ctx.report.note("capacity", z.ball.capacity());
    ctx.report.note("cylinder capacity", z.cylinder_capacity());
    ctx.report.note("tightness", z.tightness());
    ctx.figure("skeleton.svg", svg::skeleton_svg(&z.skeleton, z.g.margin, "skeleton"));
    ctx.figure("strip.svg", svg::strip_svg(&z.strip, "strip"));
    let q = st.hypersurface();
    let x0 = st.seed.map.eval(&[0.0, 0.0]);
    let ch = q.characteristic_through(&x0)?;
    ctx.figure("characteristic.csv", ch.to_csv());
    ctx.figure("characteristic.svg", svg::characteristic_svg(&ch, 0, "characteristic"));
    if !ctx.verify() {
        return Ok(());
    }
    ctx.report.push(CheckRecord::new(
        "square translation energy ≤ 1.02 c",
        Basis::Ledger,
        0,
        1.02,
        st.energy / c,
        st.energy <= 1.02 * c,
    ));
    let d = st.disjunction(ctx.samples, ctx.seed)?;
    ctx.report
        .push(CheckRecord::above("square translation disjoins B(c)", Basis::Oracle, d.samples, 0.0, d.min_margin).at(d.worst_point));
    let ok = ctx.defect("pullback defect", &z.ball)?;
    let o = z.check_overlaps(ctx.samples / 4, ctx.seed)?;
    ctx.report.push(CheckRecord::new(
        "quotient is injective on the ball",
        Basis::Oracle,
        o.samples,
        1.0,
        o.max_preimages as f64,
        o.max_preimages <= 1 && o.unresolved == 0,
    ));
    if variant == ZVariant::Z {
        ctx.report.push(CheckRecord::new("tightness ≥ 0.95", Basis::Ledger, 0, 0.95, z.tightness(), z.tightness() >= 0.95));
    }
    let fits = observe_global("z-assembly", z.ball.capacity(), z.cylinder_capacity(), ok, true);
    ctx.report.push(CheckRecord::new(
        "capacity within cylinder",
        Basis::Ledger,
        0,
        1.0,
        z.tightness(),
        fits,
    ));
    Ok(())
}

fn polar_seed(kappa: f64) -> Result<EmbeddedBall> {
    EmbeddedBall::new(kappa, Arc::new(PolarRectangle::new(kappa, kappa)?))
}

fn unwrapped(kappa: f64, n: usize, iso: Isotopy, ctx: &mut Ctx) -> Result<()> {
    let seed = polar_seed(kappa)?;
    let ub = unwrapped_ball(&seed, &iso, n, kappa)?;
    ctx.report.note("capacity", ub.ball.capacity());
    ctx.report.note("margin", ub.margin());
    sample_figure(ctx, "samples.svg", &ub.g.skeleton, ub.margin(), &ub.ball, "unwrapped ball")?;
    if !ctx.verify() {
        return Ok(());
    }
    ctx.defect("pullback defect", &ub.ball)?;
    let d = strictly_disjoins(ub.isotopy(), &seed, n.saturating_sub(1).max(1), ctx.samples.min(2000), ctx.seed)?;
    ctx.report.push(
        CheckRecord::above("generator disjoins the seed", Basis::Oracle, d.samples, 0.0, d.min_margin)
            .at(d.worst_point)
            .with_context(format!("iterate {}", d.worst_iterate)),
    );
    Ok(())
}

fn wrapped(kappa: f64, e: f64, n: usize, eps: f64, counterfactual: bool, ctx: &mut Ctx) -> Result<()> {
    let (seed, iso) = if counterfactual {
        compressing_pseudo_isotopy(kappa, e, kappa)?
    } else {
        (polar_seed(kappa)?, translation_for_energy(kappa, e, 0.02)?)
    };
    let ub = unwrapped_ball(&seed, &iso, n, kappa)?;
    let settings = WrapSettings {
        seed: ctx.seed,
        ..WrapSettings::default()
    };
    let mut w = wrap_quotient(&ub, eps, settings)?;
    ctx.report.counterfactual = counterfactual;
    ctx.report.ledger = Some(w.ledger.clone());
    ctx.report.note("capacity", w.ball.capacity());
    ctx.report.note("cylinder capacity", w.cylinder_capacity());
    ctx.figure("skeleton.svg", svg::skeleton_svg(&w.unwrapped.g.skeleton, w.unwrapped.margin(), "Y_N"));
    ctx.figure("strip.svg", svg::strip_svg(&w.strip, "strip"));
    sample_figure(ctx, "samples.svg", &w.unwrapped.g.skeleton, w.unwrapped.margin(), &w.unwrapped.ball, "unwrapped ball")?;
    if !ctx.verify() {
        return Ok(());
    }
    let certs = w.certify(ctx.samples, ctx.seed)?;
    for c in &certs {
        let mut r = CheckRecord::from_certificate(c, ctx.samples);
        if counterfactual {
            r = r.expecting_failure();
        }
        ctx.report.push(r);
    }
    let excess = w.ball.capacity() > w.cylinder_capacity();
    ctx.report.push(CheckRecord::new(
        "counterfactual flag matches the ledger",
        Basis::Ledger,
        0,
        0.0,
        w.ball.capacity() - w.cylinder_capacity(),
        w.counterfactual == excess,
    ));
    if counterfactual {
        let sym = &certs[0];
        let localized = !sym.passed && sym.measured > 1e-2 && sym.location.is_some() && !sym.context.is_empty();
        ctx.report.push(
            CheckRecord::new("broken certificate localized", Basis::Verifier, ctx.samples, 1e-2, sym.measured, localized)
                .with_context(sym.context.clone()),
        );
    } else {
        ctx.report.push(CheckRecord::new(
            "capacity within cylinder",
            Basis::Ledger,
            0,
            1.0,
            w.ball.capacity() / w.cylinder_capacity(),
            !excess,
        ));
    }
    Ok(())
}

fn family_checks(fam: &IsotopyFamily, ctx: &mut Ctx) -> Result<()> {
    let recs = fam.verify(ctx.samples, ctx.seed)?;
    for r in &recs {
        ctx.report.push(CheckRecord::below(
            &format!("slice t = {:.4} pullback defect", r.t),
            Basis::Oracle,
            ctx.samples,
            SYMPLECTIC_TOL,
            r.max_defect,
        ));
        ctx.report.push(CheckRecord::new(
            &format!("slice t = {:.4} capacity ≥ floor", r.t),
            Basis::Ledger,
            0,
            fam.floor,
            r.capacity,
            r.capacity >= fam.floor * (1.0 - 1e-12),
        ));
        if let Some(m) = r.disjunction {
            ctx.report
                .push(CheckRecord::above(&format!("slice t = {:.4} disjunction margin", r.t), Basis::Oracle, ctx.samples, 0.0, m));
        }
    }
    if let Some(reg) = &fam.regularity {
        let worst = reg.slices.iter().map(|s| s.1).fold(f64::INFINITY, f64::min);
        ctx.report.push(CheckRecord::new("δ-regularity", Basis::Oracle, ctx.samples, 0.0, worst, reg.passed));
    }
    Ok(())
}

fn family_settings(ctx: &Ctx) -> FamilySettings {
    FamilySettings {
        samples: ctx.samples.min(400),
        seed: ctx.seed,
        ..FamilySettings::default()
    }
}

fn grid_of(points: usize, hi: f64) -> Vec<f64> {
    (0..points).map(|k| hi * k as f64 / (points - 1) as f64).collect()
}

fn unwrap_family(lambda: f64, eps: f64, delta: f64, n: usize, points: usize, ctx: &mut Ctx) -> Result<()> {
    let settings = family_settings(ctx);
    ctx.report.environment.grid = Some(settings.grid);
    let fam = unwrap_isotopy_family(lambda, eps, delta, n, &grid_of(points, 1.0), settings)?;
    let target = lambda / n as f64 + lambda + 2.0 * eps;
    ctx.report.ledger = fam.slices.first().map(|s| s.ledger.clone());
    ctx.report.note("ledger bound", target);
    ctx.report.note("max grid energy", fam.max_energy());
    let yn = build_yn(n, lambda)?;
    for (k, s) in fam.slices.iter().enumerate() {
        sample_figure(ctx, &format!("slice-{k:02}.svg"), &yn, 0.0, &s.ball, &format!("t = {:.4}", s.t))?;
    }
    if !ctx.verify() {
        return Ok(());
    }
    for s in &fam.slices {
        let total = s.ledger.total();
        ctx.report.push(CheckRecord::below(
            &format!("slice t = {:.4} ledger equals λ/N + λ + 2ε", s.t),
            Basis::Ledger,
            0,
            1e-12,
            (total - target).abs(),
        ));
        if let Some(e) = &s.energy {
            ctx.report.push(CheckRecord::new(
                &format!("slice t = {:.4} grid energy within ledger", s.t),
                Basis::Oracle,
                e.grid.per_axis.pow(2) * e.grid.time_points,
                1e-3,
                e.value - total,
                e.value <= total + 1e-3,
            ));
        }
    }
    family_checks(&fam, ctx)
}

fn regiso(lambda: f64, eps: f64, delta: f64, n: usize, points: usize, ctx: &mut Ctx) -> Result<()> {
    let bw = regular_wrapped_ball(lambda, eps, delta, n)?;
    let s0 = 1.0 - 1.0 / n as f64;
    let fam = regiso_family(&bw, delta, &grid_of(points, s0), family_settings(ctx))?;
    ctx.report.note("s0", s0);
    let margin = bw.unwrapped.margin();
    for (k, s) in fam.slices.iter().enumerate() {
        let skel = stretched_yn(n, lambda, s.t)?;
        sample_figure(ctx, &format!("slice-{k:02}.svg"), &skel, margin, &s.ball, &format!("s = {:.4}", s.t))?;
    }
    if !ctx.verify() {
        return Ok(());
    }
    let last = fam.slices.last().expect("at least two points");
    let area = last.ledger.get("rectangles").unwrap_or(f64::NAN);
    ctx.report.push(CheckRecord::below(
        "final rectangle area equals λ",
        Basis::Ledger,
        0,
        1e-12,
        (area - lambda).abs(),
    ));
    for s in &fam.slices {
        ctx.report.push(CheckRecord::below(
            &format!("slice s = {:.4} capacity equals λ", s.t),
            Basis::Ledger,
            0,
            1e-12,
            (s.ball.capacity() - lambda).abs(),
        ));
    }
    family_checks(&fam, ctx)
}

fn disjunction(h: crate::hamiltonian::TimeDepHamiltonian, capacity: f64, center: Vec<f64>, iterates: usize, delta: Option<f64>, ctx: &mut Ctx) -> Result<()> {
    let dim = h.dim();
    let map = affine("translation", Arc::new(BallRegion::new(dim, capacity)), DMatrix::identity(dim, dim), center.clone());
    let ball = EmbeddedBall::new(capacity, Arc::new(map))?;
    let grid = EnergyGrid::default();
    ctx.report.environment.grid = Some(grid);
    let energy = hofer_energy_upper(&h, &grid);
    let mut ledger = EnergyLedger::new();
    ledger.push("oscillation", energy.value, "sup H − inf H on the grid");
    ctx.report.ledger = Some(ledger);
    let q = GraphHypersurface::new(h.clone());
    let ch = q.characteristic_through(&center)?;
    ctx.figure("characteristic.csv", ch.to_csv());
    ctx.figure("characteristic.svg", svg::characteristic_svg(&ch, 0, "characteristic"));
    if !ctx.verify() {
        return Ok(());
    }
    let iso = Isotopy::hamiltonian(h);
    let d = strictly_disjoins(&iso, &ball, iterates, ctx.samples, ctx.seed)?;
    ctx.report.push(
        CheckRecord::above("isotopy disjoins the ball", Basis::Oracle, d.samples, 0.0, d.min_margin)
            .at(d.worst_point)
            .with_context(format!("iterate {}", d.worst_iterate)),
    );
    let he = hypersurface_energy(&q, &grid);
    ctx.report.push(CheckRecord::below(
        "hypersurface energy equals grid oscillation",
        Basis::Oracle,
        grid.per_axis.pow(dim as u32) * grid.time_points,
        1e-12,
        (he - energy.value).abs(),
    ));
    let pts = ball.image_samples(capacity, ctx.samples.min(100), ctx.seed)?;
    let mono = q.monodromy(Arc::new(BallRegion::new(dim, 1e6)));
    let (mut flow_gap, mut back_gap) = (0.0_f64, 0.0_f64);
    for p in &pts {
        let m = mono.eval(p);
        let f = iso.flow_adaptive(p, 0.0, 1.0)?;
        flow_gap = nan_max(flow_gap, sup_distance(&m, &f));
        let back = mono.inverse(&m).unwrap_or_else(|| vec![f64::NAN; dim]);
        back_gap = nan_max(back_gap, sup_distance(&back, p));
    }
    ctx.report.push(CheckRecord::below("monodromy matches the flow", Basis::Oracle, pts.len(), 1e-6, flow_gap));
    ctx.report.push(CheckRecord::below("reversed monodromy inverts", Basis::Oracle, pts.len(), 1e-6, back_gap));
    if let Some(delta) = delta {
        let s_grid: Vec<f64> = (0..=20).map(|k| delta + (1.0 - delta) * k as f64 / 20.0).collect();
        let reg = delta_regular_check(&iso, &ball, delta, &s_grid, ctx.samples.min(1000), iterates, ctx.seed)?;
        let worst = reg.slices.iter().map(|s| s.1).fold(f64::INFINITY, f64::min);
        ctx.report.push(CheckRecord::new("δ-regularity", Basis::Oracle, ctx.samples.min(1000), 0.0, worst, reg.passed));
    }
    Ok(())
}

fn nan_max(a: f64, b: f64) -> f64 {
    if a.is_nan() || b.is_nan() {
        f64::NAN
    } else {
        a.max(b)
    }
}

fn sup_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, nan_max)
}

/// Writes the figures into `dir`, each through a temporary file and a
/// rename. Nothing is created for an empty list.
pub fn emit_figures(figures: &[Figure], dir: &Path) -> Result<Vec<PathBuf>> {
    if figures.is_empty() {
        return Ok(Vec::new());
    }
    let io = |path: &Path| {
        let path = path.display().to_string();
        move |source| Error::Io { path, source }
    };
    std::fs::create_dir_all(dir).map_err(io(dir))?;
    let mut out = Vec::with_capacity(figures.len());
    for f in figures {
        let path = dir.join(&f.file_name);
        write_atomic(&path, &f.contents)?;
        out.push(path);
    }
    Ok(out)
}

pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let tmp = path.with_extension("tmp");
    let err = |p: &Path| {
        let p = p.display().to_string();
        move |source| Error::Io { path: p, source }
    };
    std::fs::write(&tmp, contents).map_err(err(&tmp))?;
    std::fs::rename(&tmp, path).map_err(err(path))
}

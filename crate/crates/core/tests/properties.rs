use std::sync::Arc;

use proptest::prelude::*;
use symplectic_energy::ball::EmbeddedBall;
use symplectic_energy::constructions::{shrink_family, unwrapped_ball, EnergyLedger, NonSqueezingMonitor};
use symplectic_energy::expr::Expr;
use symplectic_energy::isotopy::strip_translation_isotopy;
use symplectic_energy::map::SmoothMap;
use symplectic_energy::profile::{DiscToSkeleton, PolarRectangle};
use symplectic_energy::sampling::sample_interior;
use symplectic_energy::skeleton::build_yn;
use symplectic_energy::square::DiscToSquare;
use symplectic_energy::strip::{annulus_quotient, StripWithQuotient};
use symplectic_energy::svg;

fn config() -> ProptestConfig {
    ProptestConfig {
        cases: 16,
        ..ProptestConfig::default()
    }
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn polar_rectangle_is_symplectic(cap in 0.2f64..3.0, h in 0.3f64..3.0, seed in 0u64..1000) {
        let mut b = EmbeddedBall::new(cap, Arc::new(PolarRectangle::new(cap, h).unwrap())).unwrap();
        let rep = b.verify(300, seed).unwrap();
        prop_assert!(rep.max_defect < 1e-6, "{rep:?}");
        for p in b.domain_samples(cap, 50, seed, 0.0).unwrap() {
            let y = b.map.eval(&p);
            prop_assert!(y[0] <= 1e-12 && y[0] >= -cap / h - 1e-12 && y[1] >= -1e-12 && y[1] <= h + 1e-12);
        }
    }

    #[test]
    fn disc_to_square_is_symplectic(cap in 0.2f64..4.0, seed in 0u64..1000) {
        let mut b = EmbeddedBall::new(cap, Arc::new(DiscToSquare::new(cap).unwrap())).unwrap();
        let rep = b.verify(300, seed).unwrap();
        prop_assert!(rep.max_defect < 1e-6, "{rep:?}");
    }

    #[test]
    fn disc_spreads_over_yn(n in 1usize..5, kappa in 0.3f64..2.0, seed in 0u64..1000) {
        let y = build_yn(n, kappa).unwrap();
        let m = y.default_margin();
        let lift = DiscToSkeleton::new(kappa * 1.001, &y, m, 1e-3 * kappa).unwrap();
        let cap = lift.effective_capacity();
        let mut b = EmbeddedBall::new(cap, Arc::new(lift)).unwrap();
        prop_assert!(b.verify(300, seed).unwrap().max_defect < 1e-6);
        let nb = y.neighborhood(m);
        for q in b.image_samples(cap, 200, seed).unwrap() {
            prop_assert!(symplectic_energy::region::Region::contains(&nb, &q), "{q:?}");
        }
    }

    #[test]
    fn quotient_identifies_translates(n in 1usize..6, e in 0.0f64..1.5, seed in 0u64..1000) {
        let strip = StripWithQuotient::for_yn(n, 1.0, e, 0.01, 0.01, 0.005).unwrap();
        let q = annulus_quotient(&strip, 0.05).unwrap();
        let pts = sample_interior(&strip.region(), 100, seed, 0.0).unwrap();
        for p in pts {
            let (a, b) = (q.eval(&p), q.eval(&strip.translate(&p, 1)));
            prop_assert!((a[0] - b[0]).abs() < 1e-9 && (a[1] - b[1]).abs() < 1e-9);
            let level = std::f64::consts::PI * (a[0] * a[0] + a[1] * a[1]);
            prop_assert!(level <= q.capacity() + 1e-12);
        }
        prop_assert!(q.capacity() <= strip.area + 0.05 + 1e-12);
    }

    #[test]
    fn ledgers_are_additive(values in proptest::collection::vec(0.0f64..10.0, 1..8)) {
        let mut l = EnergyLedger::new();
        for (i, v) in values.iter().enumerate() {
            l.push(&format!("term {i}"), *v, "");
        }
        let total: f64 = values.iter().sum();
        prop_assert!((l.total() - total).abs() < 1e-12);
        prop_assert_eq!(l.get("term 0"), Some(values[0]));
    }

    #[test]
    fn expressions_match_closures(a in -5.0f64..5.0, b in -5.0f64..5.0, x in -2.0f64..2.0, y in -2.0f64..2.0, s in 0.0f64..1.0) {
        let e = Expr::parse(&format!("{a} * x^2 + {b} * y * s - min(x, y) + max(x, 0)"), 2).unwrap();
        let want = a * x * x + b * y * s - x.min(y) + x.max(0.0);
        prop_assert!((e.eval(&[x, y], s) - want).abs() < 1e-12 * (1.0 + want.abs()));
    }

    #[test]
    fn translation_flows_agree(nu in 1.1f64..2.0, u in -1.0f64..0.0, v in 0.05f64..0.95) {
        let iso = strip_translation_isotopy(1.0, nu, 0.05).unwrap();
        let exact = iso.flow(&[u, v], 0.0, 1.0).unwrap();
        let numeric = iso.flow_adaptive(&[u, v], 0.0, 1.0).unwrap();
        prop_assert!((exact[0] - numeric[0]).abs() < 1e-6 && (exact[1] - numeric[1]).abs() < 1e-6);
        prop_assert!((exact[1] - v).abs() < 1e-12);
    }

    #[test]
    fn skeleton_figures_are_deterministic(n in 1usize..6, kappa in 0.2f64..3.0) {
        let y = build_yn(n, kappa).unwrap();
        let a = svg::skeleton_svg(&y, y.default_margin(), "Y");
        prop_assert_eq!(&a, &svg::skeleton_svg(&y, y.default_margin(), "Y"));
        prop_assert_eq!(a.matches("class=\"rect\"").count(), n);
        prop_assert!(!a.contains("NaN") && !a.contains("inf"));
    }

    #[test]
    fn monitor_flags_only_honest_verified_excess(ball in 0.1f64..3.0, cyl in 0.1f64..3.0, verified: bool, honest: bool) {
        let mut m = NonSqueezingMonitor::new();
        let fits = m.observe("x", ball, cyl, verified, honest);
        let excess = ball > cyl * (1.0 + 1e-9);
        prop_assert_eq!(fits, !(excess && verified && honest));
    }
}

#[test]
fn shrink_family_stays_above_floor() {
    let iso = strip_translation_isotopy(1.0, 1.1, 0.02).unwrap();
    let seed = EmbeddedBall::new(1.0, Arc::new(PolarRectangle::new(1.0, 1.0).unwrap())).unwrap();
    let ub = unwrapped_ball(&seed, &iso, 3, 1.0).unwrap();
    let ts: Vec<f64> = (0..=10).map(|k| k as f64 / 10.0).collect();
    let fam = shrink_family(&ub, 0.6, &ts).unwrap();
    let caps: Vec<f64> = fam.records().iter().map(|r| r.capacity).collect();
    assert!(caps.iter().all(|&c| c >= 0.6 - 1e-12));
    assert!(caps.windows(2).all(|w| w[1] <= w[0]));
    let pts = fam.slices[0].ball.domain_samples(0.6, 20, 1, 0.0).unwrap();
    let (d1, d2) = fam.t_derivative(0.5, 0.1, &pts).unwrap();
    assert!(d1.is_finite() && (d1 - d2).abs() <= 1e-9 + 0.1 * d1);
}

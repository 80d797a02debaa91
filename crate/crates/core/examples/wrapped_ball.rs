//! Honest wrapping of `B²(1)` along `Y_10` and the counterfactual run with
//! energy `0.5`, where the verifier must find the broken step.

use std::sync::Arc;

use symplectic_energy::ball::EmbeddedBall;
use symplectic_energy::constructions::{compressing_pseudo_isotopy, translation_for_energy, unwrapped_ball, wrap_quotient, WrapSettings};
use symplectic_energy::profile::PolarRectangle;

fn main() -> symplectic_energy::Result<()> {
    let seed = EmbeddedBall::new(1.0, Arc::new(PolarRectangle::new(1.0, 1.0)?))?;
    let ub = unwrapped_ball(&seed, &translation_for_energy(1.0, 1.05, 0.02)?, 10, 1.0)?;
    let mut w = wrap_quotient(&ub, 0.05, WrapSettings::default())?;
    println!("honest: ball {:.4} in cylinder {:.4}", w.ball.capacity(), w.cylinder_capacity());
    for c in w.certify(1000, 3)? {
        println!("  {:<36} {:>5} {:.3e}", c.name, c.passed, c.measured);
    }
    let (seed, iso) = compressing_pseudo_isotopy(1.0, 0.5, 1.0)?;
    let ub = unwrapped_ball(&seed, &iso, 10, 1.0)?;
    let mut w = wrap_quotient(&ub, 0.05, WrapSettings::default())?;
    println!("counterfactual: ball {:.4} in cylinder {:.4}", w.ball.capacity(), w.cylinder_capacity());
    let certs = w.certify(1000, 3)?;
    println!("  broken: {} ({:.3e}) at {}", certs[0].name, certs[0].measured, certs[0].context);
    Ok(())
}

//! Checks `JᵀΩJ = Ω` for a few planar maps by finite differences.

use std::sync::Arc;

use symplectic_energy::ball::EmbeddedBall;
use symplectic_energy::profile::PolarRectangle;
use symplectic_energy::square::DiscToSquare;

fn main() -> symplectic_energy::Result<()> {
    let maps: Vec<(&str, EmbeddedBall)> = vec![
        ("polar rectangle", EmbeddedBall::new(1.0, Arc::new(PolarRectangle::new(1.0, 0.5)?))?),
        ("disc to square", EmbeddedBall::new(2.0, Arc::new(DiscToSquare::new(2.0)?))?),
    ];
    for (name, mut b) in maps {
        let rep = b.verify(5000, 1)?;
        println!("{name}: max defect {:.2e} over {} samples", rep.max_defect, rep.samples);
    }
    Ok(())
}

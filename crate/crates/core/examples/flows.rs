//! A strip translation: energy certificate, disjunction and δ-regularity.

use std::sync::Arc;

use symplectic_energy::ball::EmbeddedBall;
use symplectic_energy::hamiltonian::{hofer_energy_upper, EnergyGrid};
use symplectic_energy::isotopy::{delta_regular_check, strictly_disjoins, strip_translation_isotopy};
use symplectic_energy::profile::PolarRectangle;

fn main() -> symplectic_energy::Result<()> {
    let iso = strip_translation_isotopy(1.0, 1.5, 0.01)?;
    let h = iso.hamiltonian_ref().expect("hamiltonian");
    let e = hofer_energy_upper(h, &EnergyGrid::default());
    println!("energy: grid {:.4}, exact {:?}", e.value, e.analytic);
    let ball = EmbeddedBall::new(0.9, Arc::new(PolarRectangle::new(0.9, 1.0)?))?;
    let d = strictly_disjoins(&iso, &ball, 4, 2000, 1)?;
    println!("disjoint: {} (margin {:.3e})", d.disjoint, d.min_margin);
    let grid: Vec<f64> = (0..=20).map(|k| 0.1 + 0.9 * k as f64 / 20.0).collect();
    let r = delta_regular_check(&iso, &ball, 0.1, &grid, 1000, 4, 2)?;
    println!("0.1-regular: {}", r.passed);
    Ok(())
}

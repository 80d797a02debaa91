//! Graph hypersurface of a random bump Hamiltonian: monodromy against the
//! flow, energy, and a characteristic written as CSV.

use std::sync::Arc;

use symplectic_energy::hamiltonian::{hofer_energy_upper, random_bump_hamiltonian, EnergyGrid};
use symplectic_energy::hypersurface::{hypersurface_energy, GraphHypersurface};
use symplectic_energy::isotopy::Isotopy;
use symplectic_energy::map::SmoothMap;
use symplectic_energy::region::BallRegion;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let h = random_bump_hamiltonian(2, 4, 17);
    let q = GraphHypersurface::new(h.clone());
    let grid = EnergyGrid::default();
    println!("e(Q) = {:.6}, osc H = {:.6}", hypersurface_energy(&q, &grid), hofer_energy_upper(&h, &grid).value);
    let mono = q.monodromy(Arc::new(BallRegion::new(2, 2.0)));
    let iso = Isotopy::hamiltonian(h);
    let p = [0.2, -0.1];
    let (a, b) = (mono.eval(&p), iso.flow_adaptive(&p, 0.0, 1.0)?);
    println!("monodromy {a:?}\nflow      {b:?}");
    let c = q.characteristic_through(&p)?;
    std::fs::write("characteristic.csv", c.to_csv())?;
    println!("wrote characteristic.csv ({} points)", c.points.len());
    Ok(())
}

//! Square translation of `B²(1)` and the glued ball in `V × B²(A + ε)`.

use symplectic_energy::constructions::{z_pipeline, ZVariant};

fn main() -> symplectic_energy::Result<()> {
    let (st, mut z) = z_pipeline(ZVariant::Z, 1.0, 0.01)?;
    println!("square translation energy {:.4}, disjoint {}", st.energy, st.disjunction(2000, 1)?.disjoint);
    let d = z.ball.verify(5000, 2)?;
    println!(
        "ball {:.4} in cylinder {:.4}: tightness {:.4}, defect {:.2e}",
        z.ball.capacity(),
        z.cylinder_capacity(),
        z.tightness(),
        d.max_defect
    );
    Ok(())
}

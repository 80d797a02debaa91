//! `B⁴(2) ↪ ℝ² × N(Z_{2,1})` and the fibres over the far rectangle.

use symplectic_energy::constructions::lisa_ball_embedding;

fn main() -> symplectic_energy::Result<()> {
    let mut l = lisa_ball_embedding(2.0, 1.0, 1, None)?;
    let d = l.ball.verify(5000, 1)?;
    let f = l.fiber_check(5000, 2)?;
    println!("capacity {:.4}, defect {:.2e}", l.ball.capacity(), d.max_defect);
    println!("far fibres: capacity ≤ {:.4} (bound {})", f.max_fiber_capacity.max(f.max_sampled_level), f.bound);
    Ok(())
}

//! Builds `Y_N(κ)` and the `Z` profile, spreads a disc over `Y_N` and writes
//! the figures to the current directory.

use std::sync::Arc;

use symplectic_energy::ball::EmbeddedBall;
use symplectic_energy::profile::DiscToSkeleton;
use symplectic_energy::skeleton::{build_yn, build_z_profile, DEFAULT_MIN_AREA};
use symplectic_energy::svg;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let y = build_yn(4, 1.0)?;
    let m = y.default_margin();
    let lift = DiscToSkeleton::new(1.0, &y, m, 1e-3)?;
    let mut b = EmbeddedBall::new(lift.effective_capacity(), Arc::new(lift))?;
    println!("Y_4(1): rect area {:.4}, margin {m:.1e}, defect {:.2e}", y.total_rect_area(), b.verify(3000, 2)?.max_defect);
    let pts = b.image_samples(b.capacity(), 400, 3)?;
    std::fs::write("y4.svg", svg::samples_svg(&y, m, &pts, "Y_4"))?;
    let z = build_z_profile(2.0, 1.0, DEFAULT_MIN_AREA)?;
    std::fs::write("z.svg", svg::skeleton_svg(&z, z.default_margin(), "Z_{2,1}"))?;
    println!("wrote y4.svg and z.svg");
    Ok(())
}

//! The unwrapping family and the rectangle-lengthening family.

use symplectic_energy::constructions::{regiso_family, regular_wrapped_ball, uniform_grid, unwrap_isotopy_family, FamilySettings};

fn main() -> symplectic_energy::Result<()> {
    let ts = uniform_grid(6);
    let fam = unwrap_isotopy_family(1.0, 0.1, 0.1, 3, &ts, FamilySettings::default())?;
    for r in fam.verify(2000, 1)? {
        println!("unwrap t = {:.1}: defect {:.2e}, energy {:.4} ≤ {:.4}", r.t, r.max_defect, r.energy.unwrap_or(f64::NAN), r.ledger_total);
    }
    let bw = regular_wrapped_ball(1.0, 0.05, 0.1, 4)?;
    let ss: Vec<f64> = ts.iter().map(|t| 0.75 * t).collect();
    let fam = regiso_family(&bw, 0.1, &ss, FamilySettings::default())?;
    for r in fam.records() {
        println!("regiso s = {:.3}: arms {:?}, margin {:.3e}", r.t, r.arms, r.disjunction.unwrap_or(f64::NAN));
    }
    Ok(())
}

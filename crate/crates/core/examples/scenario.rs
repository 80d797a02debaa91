//! Runs a scenario file through the workbench and prints the JSON report.

use symplectic_energy::workbench::{run, Mode, Overrides, Scenario};

fn main() -> symplectic_energy::Result<()> {
    let path = std::env::args().nth(1).unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/scenarios/lisa.json").into());
    let s = Scenario::load(path.as_ref())?;
    let out = run(&s, Mode::Verify, Overrides::default());
    print!("{}", out.report.to_json());
    std::process::exit(out.report.status.exit_code());
}

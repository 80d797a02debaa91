use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use symplectic_energy::workbench::{emit_figures, invalid_report, run, write_atomic, Mode, Overrides, RunOutput, Scenario};

#[derive(Parser)]
#[command(name = "workbench", version, about = "Build and verify symplectic ball constructions from JSON scenarios")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Construct without running the checks.
    Build(Opts),
    /// Construct and run every check; exit 1 if one fails.
    Verify(Opts),
    /// Construct and write SVG/CSV figures into --out.
    Figures(Opts),
}

#[derive(Args)]
struct Opts {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    samples: Option<usize>,
    /// Print the report as JSON.
    #[arg(long)]
    json: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (mode, figures, opts) = match cli.command {
        Command::Build(o) => (Mode::Build, false, o),
        Command::Verify(o) => (Mode::Verify, false, o),
        Command::Figures(o) => (Mode::Build, true, o),
    };
    let out = match Scenario::load(&opts.scenario) {
        Ok(s) => run(
            &s,
            mode,
            Overrides {
                seed: opts.seed,
                samples: opts.samples,
            },
        ),
        Err(e) => RunOutput {
            report: invalid_report(&opts.scenario.display().to_string(), &e),
            figures: Vec::new(),
        },
    };
    let report = &out.report;
    let mut code = report.status.exit_code();
    if let Some(dir) = &opts.out {
        let written = std::fs::create_dir_all(dir)
            .map_err(|e| format!("{}: {e}", dir.display()))
            .and_then(|_| write_atomic(&dir.join("report.json"), &report.to_json()).map_err(|e| e.to_string()));
        if let Err(e) = written {
            eprintln!("{e}");
            code = code.max(3);
        }
    }
    if figures && code == 0 {
        let dir = opts.out.clone().unwrap_or_else(|| PathBuf::from("figures"));
        match emit_figures(&out.figures, &dir) {
            Ok(paths) => {
                for p in paths {
                    eprintln!("wrote {}", p.display());
                }
            }
            Err(e) => {
                eprintln!("{e}");
                code = 3;
            }
        }
    }
    if opts.json {
        print!("{}", report.to_json());
    } else {
        print!("{}", report.to_text());
    }
    ExitCode::from(code as u8)
}

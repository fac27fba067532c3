use std::process::ExitCode;

use clap::Parser;

use spillover_cli::{run, Cli, Command};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(summary) => {
            if let Command::Validate(a) = &cli.command {
                println!("{}: valid", a.config.display());
            }
            if let Some(o) = &summary.outcome {
                let s = o.report.summary;
                println!(
                    "{}: {} of {} checks passed (config {})",
                    o.report.command,
                    s.passed,
                    s.total,
                    &o.report.config_digest[..12]
                );
                for c in o.report.checks.iter().filter(|c| !c.passed) {
                    println!(
                        "  FAILED {}: measured {:e}, threshold {:e}",
                        c.name, c.measured, c.threshold
                    );
                }
            }
            for p in &summary.written {
                println!("wrote {}", p.display());
            }
            if summary.exit_code == spillover_cli::error::EXIT_NO_CONVERGENCE {
                eprintln!("error: iteration did not converge; report written with converged = false");
            }
            ExitCode::from(summary.exit_code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use gl_lab::runner::{self, exit_code, load_config, EXIT_INCONSISTENT, EXIT_OK};
use gl_lab::Error;

#[derive(Parser)]
#[command(
    name = "gl",
    version,
    about = "Degree-zero Ginzburg–Landau sweeps on the unit square and disk"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the sweep described by a TOML config.
    Run {
        config: PathBuf,
        /// Comma-separated, strictly decreasing ε values.
        #[arg(long, value_delimiter = ',')]
        epsilons: Option<Vec<f64>>,
        #[arg(long)]
        resolution: Option<usize>,
        /// Output directory (defaults to the config's output.dir).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a config and list every violation.
    Validate { config: PathBuf },
    /// Recompute verdicts from a finished run directory.
    Report { run_dir: PathBuf },
}

fn fail(err: &Error) -> ExitCode {
    eprintln!("error: {err}");
    ExitCode::from(exit_code(err) as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Validate { config } => match load_config(&config) {
            Ok(c) => {
                println!(
                    "ok: {:?} on {:?} n={} with {} epsilon level(s), tau={}",
                    c.problem,
                    c.domain.kind,
                    c.domain.resolution,
                    c.epsilons.len(),
                    c.solver.tau
                );
                ExitCode::SUCCESS
            }
            Err(e) => fail(&e),
        },
        Command::Run {
            config,
            epsilons,
            resolution,
            out,
        } => {
            let mut c = match load_config(&config) {
                Ok(c) => c,
                Err(e) => return fail(&e),
            };
            c.apply_overrides(epsilons, resolution, out);
            match runner::run(&c) {
                Ok(summary) => {
                    for level in &summary.levels {
                        match (&level.report, &level.failure) {
                            (Some(r), _) => println!(
                                "eps={:<8} E={:.6} potential={:.3e} h1={:.3e} residual={:.1e} steps={}",
                                level.epsilon,
                                r.g_energy,
                                r.potential_combined,
                                r.h1_dist_u + r.h1_dist_v,
                                r.residual,
                                r.steps
                            ),
                            (None, f) => println!("eps={:<8} FAILED: {}", level.epsilon, f.as_deref().unwrap_or("")),
                        }
                    }
                    for v in &summary.verdicts.verdicts {
                        println!("{:?}: {} ({})", v.outcome, v.check, v.detail);
                    }
                    println!("artifacts in {}", summary.out_dir.display());
                    ExitCode::from(summary.exit_code as u8)
                }
                Err(e) => fail(&e),
            }
        }
        Command::Report { run_dir } => match runner::report(&run_dir) {
            Ok(doc) => {
                println!("status: {}", doc.status);
                for v in &doc.verdicts {
                    println!("{:?}: {} ({})", v.outcome, v.check, v.detail);
                }
                let code = if doc.any_inconsistent() {
                    EXIT_INCONSISTENT
                } else {
                    EXIT_OK
                };
                ExitCode::from(code as u8)
            }
            Err(e) => fail(&e),
        },
    }
}

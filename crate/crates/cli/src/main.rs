use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use vdclab::{execute, outputs, parse_config, write_outputs, EXIT_ERROR};
use vdclab_core::experiments::{zoo, zoo_irrationals};

#[derive(Parser)]
#[command(name = "vdclab", version, about = "Correlation and recurrence experiments on torus dynamics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write report.json, metrics.csv and decay.csv.
    Run {
        config: PathBuf,
        /// Output directory; defaults to the config's `output` field.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads.
        #[arg(long)]
        threads: Option<usize>,
        /// Run twice and fail unless the outputs are byte-identical.
        #[arg(long)]
        seed_check: bool,
    },
    /// Parse and validate a config, listing every violation.
    Validate { config: PathBuf },
    /// List the built-in labeled orbits and the irrationals they use.
    Zoo,
}

fn fail(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(EXIT_ERROR as u8)
}

fn load(path: &PathBuf) -> Result<(vdclab::ConfigDocument, vdclab::Resolved), ExitCode> {
    let text = fs::read_to_string(path).map_err(|e| fail(format!("reading {}: {e}", path.display())))?;
    parse_config(&text).map_err(|errors| {
        for e in &errors {
            eprintln!("{}: {e}", path.display());
        }
        fail(format!("{} violation(s) in {}", errors.len(), path.display()))
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Validate { config } => match load(&config) {
            Ok((doc, _)) => {
                println!("{}: valid {} experiment", config.display(), doc.experiment.kind());
                ExitCode::SUCCESS
            }
            Err(code) => code,
        },
        Command::Zoo => {
            for a in zoo_irrationals() {
                println!("irrational {} {}", a.label(), a.hex());
            }
            for e in zoo() {
                println!("{:<16} {:<9} {}", e.name, e.expected.to_string(), e.description);
            }
            ExitCode::SUCCESS
        }
        Command::Run {
            config,
            out,
            threads,
            seed_check,
        } => {
            if let Some(k) = threads {
                if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(k).build_global() {
                    return fail(format!("thread pool: {e}"));
                }
            }
            let (doc, resolved) = match load(&config) {
                Ok(x) => x,
                Err(code) => return code,
            };
            let Some(dir) = out.or_else(|| doc.output.as_ref().map(PathBuf::from)) else {
                return fail("no output directory: pass --out or set `output` in the config");
            };
            let report = match execute(&doc, &resolved) {
                Ok(r) => r,
                Err(e) => return fail(e),
            };
            if seed_check {
                let again = match execute(&doc, &resolved) {
                    Ok(r) => r,
                    Err(e) => return fail(e),
                };
                for ((name, a), (_, b)) in outputs(&report).iter().zip(outputs(&again)) {
                    if *a != b {
                        return fail(format!("{name} differs between two runs"));
                    }
                }
            }
            if let Err(e) = write_outputs(&report, &dir) {
                return fail(e);
            }
            println!("{} {} -> {}", report.name, report.verdict, dir.display());
            if let Some(reason) = &report.abstain_reason {
                println!("abstained: {reason}");
            }
            ExitCode::from(report.verdict.exit_code() as u8)
        }
    }
}

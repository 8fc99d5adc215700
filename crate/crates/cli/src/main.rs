use std::path::PathBuf;
use std::process::ExitCode;

use bohm2p_cli::suite::{run_suite, CheckSuiteConfig};
use bohm2p_cli::{load_scenario, output, run, scenarios, write_run, CliError};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "bohm2p", version, about = "Two-particle Bohmian trajectories in two-slit devices")]
struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true, env = "BOHM2P_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample, propagate and evaluate a scenario (a JSON file or a built-in name).
    Run {
        config: String,
        /// Output directory; overrides `output.directory`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides `sampler.seed`.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run the property suites without an ensemble.
    Check {
        /// Check suite JSON; defaults to every suite on the default models.
        config: Option<PathBuf>,
        /// Use at most 100 random points per suite.
        #[arg(long)]
        fast: bool,
        /// Also write check_report.json here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List the built-in scenarios, or print one.
    Scenarios {
        /// Print the JSON of this scenario.
        #[arg(long)]
        show: Option<String>,
    },
    /// Draw the initial ensemble only and write samples.csv.
    Sample {
        config: String,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match execute(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn output_dir(flag: Option<PathBuf>, configured: Option<PathBuf>) -> PathBuf {
    flag.or(configured).unwrap_or_else(|| PathBuf::from("."))
}

/// Returns whether every check passed.
fn execute(cli: Cli) -> Result<bool, CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Config("invalid parameter `threads`: must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Runtime {
                stage: "startup",
                message: e.to_string(),
            })?;
    }
    match cli.command {
        Command::Run { config, out, seed } => {
            let mut cfg = load_scenario(&config)?;
            if let Some(s) = seed {
                cfg.sampler.seed = s;
            }
            let dir = output_dir(out, cfg.output.directory.clone());
            let outcome = run::run_scenario(&cfg)?;
            write_run(&dir, &outcome)?;
            let r = &outcome.report;
            println!(
                "{}: {} pairs, {} completed, {} aborted near nodes",
                if cfg.name.is_empty() { r.model } else { &cfg.name },
                r.ensemble.n_trajectories,
                r.ensemble.completed,
                r.ensemble.aborted_count
            );
            for c in &r.checks {
                let label = if c.label.is_empty() { String::new() } else { format!(" ({})", c.label) };
                println!("  [{}] {}{label}", if c.passed { "pass" } else { "FAIL" }, c.check);
            }
            println!("wrote {} in {:.2} s", dir.display(), outcome.timings.total_s);
            Ok(r.all_passed)
        }
        Command::Check { config, fast, out } => {
            let cfg = match config {
                Some(path) => CheckSuiteConfig::from_path(&path)?,
                None => CheckSuiteConfig::default(),
            };
            let report = run_suite(&cfg, fast)?;
            for o in &report.results {
                println!(
                    "[{}] {:<28} {:<26} max error {:.3e} (tolerance {:.0e}, {} points)",
                    if o.passed { "pass" } else { "FAIL" },
                    o.model,
                    o.check.name(),
                    o.max_error,
                    o.tolerance,
                    o.points
                );
            }
            if let Some(dir) = out {
                output::ensure_dir(&dir)?;
                output::write_json(&dir.join("check_report.json"), &report)?;
            }
            Ok(report.all_passed)
        }
        Command::Scenarios { show } => {
            match show {
                Some(name) => {
                    let json = scenarios::builtin_json(&name)
                        .ok_or_else(|| CliError::Config(format!("no built-in scenario named `{name}`")))?;
                    print!("{json}");
                }
                None => {
                    for (name, _) in scenarios::BUILTIN {
                        let cfg = scenarios::builtin(name)?;
                        println!("{name:<26} {}", cfg.description);
                    }
                }
            }
            Ok(true)
        }
        Command::Sample { config, out, seed } => {
            let mut cfg = load_scenario(&config)?;
            if let Some(s) = seed {
                cfg.sampler.seed = s;
            }
            let dir = output_dir(out, cfg.output.directory.clone());
            let (points, acceptance) = run::initial_points(&cfg)?;
            output::ensure_dir(&dir)?;
            output::write_samples(&dir.join("samples.csv"), &points)?;
            match acceptance {
                Some(a) => println!("{} samples, acceptance rate {a:.3}", points.len()),
                None => println!("{} explicit initial points", points.len()),
            }
            Ok(true)
        }
    }
}

use clap::{Parser, Subcommand};
use semiclassical_lab::catalog::default_parameters;
use semiclassical_lab::{list_experiments, run, ExperimentConfig};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "semiclassical-lab", version, about = "Wave-packet revival and reconstruction experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Worker threads for parameter sweeps.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Print the experiment catalog.
    List,
    /// Run the experiment described by a TOML config file.
    Run {
        config: PathBuf,
        /// Output directory (overrides `output_dir` in the config).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Treat warnings as failures.
        #[arg(long)]
        strict: bool,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match cli.command {
        Command::List => {
            for e in list_experiments() {
                println!("{:<16} {}: {}", e.experiment.name(), e.anchor, e.summary);
                println!("{:<16} defaults: {}", "", default_parameters(e.experiment));
            }
            ExitCode::SUCCESS
        }
        Command::Run { config, out, strict } => {
            let cfg = match ExperimentConfig::load(&config) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("ConfigInvalid: {e}");
                    return ExitCode::from(2);
                }
            };
            let dir = out.or_else(|| cfg.output_dir.clone()).unwrap_or_else(|| PathBuf::from("out").join(cfg.experiment.name()));
            let manifest = match run(&cfg, &dir) {
                Ok(m) => m,
                Err(e) => {
                    eprintln!("error: {e:#}");
                    return ExitCode::from(1);
                }
            };
            for c in &manifest.checks {
                println!("{} {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            for w in &manifest.warnings {
                println!("WARN {w}");
            }
            println!("wrote {} files to {} in {:.2} s", manifest.outputs.len() + 1, dir.display(), manifest.wall_time_seconds);
            if manifest.passed() && !(strict && !manifest.warnings.is_empty()) {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
    }
}

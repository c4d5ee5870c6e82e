use clap::Parser;
use std::path::PathBuf;
use std::process::ExitCode;
use tbda_cli::{run_experiment, ExperimentConfig, Overrides};

/// Runs one experiment described by a TOML file and writes CSV results.
#[derive(Debug, Parser)]
#[command(name = "tbda", version)]
struct Args {
    /// Experiment file.
    #[arg(long)]
    config: PathBuf,
    /// Added to every seed in the file.
    #[arg(long)]
    seed_base: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let run = || -> anyhow::Result<i32> {
        let mut cfg = ExperimentConfig::load(&args.config)?;
        cfg.apply(&Overrides { seed_base: args.seed_base, out: args.out.clone(), max_iter: args.max_iter, tol: args.tol });
        let mut stdout = std::io::stdout().lock();
        let outcome = run_experiment(&cfg, &mut stdout)?;
        for f in &outcome.files {
            println!("wrote {}", f.display());
        }
        Ok(outcome.code)
    };
    match run() {
        Ok(code) => ExitCode::from(code as u8),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}

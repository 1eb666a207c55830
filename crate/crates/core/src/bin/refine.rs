//! Command-line front end. Exit codes: 0 success, 2 usage or config error,
//! 3 data or format error, 4 theory verification failure.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use refine::data::{save_embeddings, save_labels, synth_gaussian, SyntheticSpec};
use refine::harness::{self, RunConfig};
use refine::{theory, Error};

#[derive(Parser)]
#[command(name = "refine", version, about = "Ensemble active learning on frozen embeddings")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the AL loop for every configured seed and save one JSON per trial.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `output.dir`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Filter an unlabeled pool once and write the refined pool and trace.
    Filter {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `dataset.labeled`.
        #[arg(long)]
        labeled: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Monte Carlo checks of the filter's survival bounds.
    VerifyTheory {
        #[arg(long, default_value_t = 10_000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Aggregate trial results in a directory into CSV tables and a summary.
    Report {
        #[arg(long)]
        dir: PathBuf,
    },
    /// Write a Gaussian-blob dataset described by a TOML spec.
    Synth {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            let code = e.downcast_ref::<Error>().map_or(1, Error::exit_code);
            ExitCode::from(code as u8)
        }
    }
}

fn run(command: Command) -> anyhow::Result<u8> {
    match command {
        Command::Run { config, out } => {
            let mut cfg = RunConfig::load(&config)?;
            if out.is_some() {
                cfg.output.dir = out;
            }
            for r in harness::run_experiment(&cfg)? {
                println!("{} seed {}: aulc {:.4}, final {:.4}", r.method, r.seed, r.aulc, r.accuracies.last().unwrap());
            }
        }
        Command::Filter { config, labeled, out } => {
            let mut cfg = RunConfig::load(&config)?;
            if labeled.is_some() {
                cfg.dataset.labeled = labeled;
            }
            let dir = out
                .or_else(|| cfg.output.dir.clone())
                .ok_or_else(|| Error::Usage("--out or output.dir is required".into()))?;
            let res = harness::filter_pool(&cfg, None)?;
            res.save(&dir)?;
            let sizes: Vec<String> = res.trace.sizes().iter().map(|s| s.to_string()).collect();
            println!("pool sizes: {}", sizes.join(" -> "));
            println!("wrote {}", dir.join("refined_pool.csv").display());
        }
        Command::VerifyTheory { trials, seed } => {
            if trials == 0 {
                return Err(Error::Usage("--trials must be at least 1".into()).into());
            }
            let checks = theory::verify_all(trials, seed)?;
            println!("{:<72} {:>9} {:>9} {:>8}  result", "check", "bound", "observed", "se");
            for c in &checks {
                let mark = if c.pass { "ok" } else { "FAIL" };
                println!("{:<72} {:>9.4} {:>9.4} {:>8.4}  {mark}", c.name, c.bound, c.empirical, c.se);
            }
            let failed = checks.iter().filter(|c| !c.pass).count();
            if failed > 0 {
                eprintln!("{failed} of {} checks failed", checks.len());
                return Ok(4);
            }
        }
        Command::Report { dir } => {
            let files = harness::report(&dir)?;
            print!(
                "{}",
                std::fs::read_to_string(&files.summary).with_context(|| files.summary.display().to_string())?
            );
        }
        Command::Synth { spec, out } => {
            let text = std::fs::read_to_string(&spec).map_err(|e| Error::Io { path: spec.clone(), source: e })?;
            let s: SyntheticSpec =
                toml::from_str(&text).map_err(|e| Error::Usage(format!("invalid synth spec: {e}")))?;
            s.validate()?;
            let (m, l) = synth_gaussian(&s)?;
            std::fs::create_dir_all(&out).map_err(|e| Error::Io { path: out.clone(), source: e })?;
            save_embeddings(out.join("embeddings.refb"), &m)?;
            save_labels(out.join("labels.refl"), &l)?;
            println!("wrote {} x {} embeddings and labels to {}", m.n_instances(), m.n_dims(), out.display());
        }
    }
    Ok(0)
}

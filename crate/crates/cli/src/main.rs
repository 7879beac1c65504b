use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use cool_cli::{execute, prepare, CliError, Experiment, Overrides, RunConfig};

#[derive(Parser)]
#[command(name = "cool", version, about = "Run COOL network experiments from config files")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a single network.
    Train(Common),
    /// Export per-class activation maps of a 2-D model.
    Vizmap(Common),
    /// Run a fooling-generator campaign against a trained model.
    Fool(Common),
    /// Train and evaluate a split-class assembly.
    Scl(Common),
    /// Train and evaluate a one-class ensemble.
    Oneclass(Common),
    /// Classify uniform-noise inputs and count confident verdicts.
    NoiseProbe(Common),
}

#[derive(Args)]
struct Common {
    /// TOML config, or a manifest.json from an earlier run.
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; overrides the config's `out_dir`.
    #[arg(long, env = "COOL_OUT_DIR")]
    out: Option<PathBuf>,
    /// Worker threads for parallel sections.
    #[arg(long)]
    threads: Option<usize>,
}

impl Command {
    fn split(self) -> (Experiment, Common) {
        match self {
            Command::Train(c) => (Experiment::Train, c),
            Command::Vizmap(c) => (Experiment::Vizmap, c),
            Command::Fool(c) => (Experiment::Fool, c),
            Command::Scl(c) => (Experiment::Scl, c),
            Command::Oneclass(c) => (Experiment::Oneclass, c),
            Command::NoiseProbe(c) => (Experiment::NoiseProbe, c),
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let (experiment, common) = cli.command.split();
    if let Some(n) = common.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Threads(e.to_string()))?;
    }
    let overrides = Overrides {
        seed: common.seed,
        out_dir: common.out,
    };
    let cfg = prepare(RunConfig::load(&common.config)?, experiment, &overrides)?;
    let (manifest, outcome) = execute(&cfg, true)?;
    print!("{}", outcome.summary);
    let out = cfg.out_dir.as_deref().unwrap_or(std::path::Path::new("."));
    println!("manifest: {}", out.join(cool_cli::manifest::MANIFEST_FILE).display());
    eprintln!("{} run finished in {:.1}s", experiment.name(), manifest.finished_at - manifest.started_at);
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use perc_chem_cli::{exit_code, run, ConfigFile, Experiment};

#[derive(Parser, Debug)]
#[command(name = "perc-chem", version, about = "Chemical-distance experiments for supercritical bond percolation")]
struct Cli {
    /// TOML file with one section per experiment. Flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Worker threads. Defaults to the available parallelism; results do not depend on it.
    #[arg(long, global = true)]
    workers: Option<usize>,

    /// Root directory for run outputs.
    #[arg(long, global = true, default_value = "runs")]
    out: PathBuf,

    #[command(subcommand)]
    experiment: Experiment,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = cli
        .config
        .as_deref()
        .map(ConfigFile::load)
        .transpose()
        .and_then(|cfg| run(cli.experiment, cfg.as_ref(), &cli.out, cli.workers));
    match result {
        Ok(dir) => {
            println!("{}", dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}

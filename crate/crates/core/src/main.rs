use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use warped_mcf::cli::{cmd_check_warping, cmd_simulate, cmd_slice, load_config};

#[derive(Parser)]
#[command(name = "wmcf", version, about = "K-invariant mean curvature flow in warped products")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Paths {
    /// JSON configuration document.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output_dir` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the flow and verify it against the configured scenario.
    Simulate(Paths),
    /// Check the warping function against the scenario's hypotheses.
    CheckWarping(Paths),
    /// Integrate the slice ODEs from constant initial data.
    Slice(Paths),
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().filter_or("WMCF_LOG", "error")).init();

    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 5 } else { 0 });
        }
    };
    let (paths, cmd): (&Paths, fn(&_) -> _) = match &cli.command {
        Command::Simulate(p) => (p, cmd_simulate),
        Command::CheckWarping(p) => (p, cmd_check_warping),
        Command::Slice(p) => (p, cmd_slice),
    };
    let result = load_config(&paths.config, paths.out.as_deref()).and_then(|cfg| cmd(&cfg));
    match result {
        Ok(outcome) => ExitCode::from(outcome.exit_code()),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

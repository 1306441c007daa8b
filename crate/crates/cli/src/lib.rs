//! Library half of the `aucmax` command-line tool: argument types, config
//! resolution, the training pipeline and the subcommand bodies.

pub mod cli;
pub mod commands;
pub mod config;
pub mod pipeline;

use config::{FileConfig, UsageError, SEED_ENV};

pub use cli::{Cli, Command};

/// Exit status for runtime and data errors.
pub const EXIT_FAILURE: i32 = 1;
/// Exit status for invalid invocations.
pub const EXIT_USAGE: i32 = 2;

/// Runs a parsed command line.
pub fn run(cli: &Cli) -> anyhow::Result<()> {
    let file = FileConfig::load(cli.config.as_deref())?;
    let seed = || config::resolve_seed(cli.seed, &file, std::env::var(SEED_ENV).ok());
    match &cli.command {
        Command::Synth(args) => commands::synth(&config::synth_config(args, &file, seed()?)?)?.write(),
        Command::Extract(args) => commands::extract(&config::extract_config(args, &file)?)?.write(),
        Command::Train(args) => commands::train(&config::train_config(args, &file, seed()?)?)?.write(),
        Command::Compare(args) => commands::compare_cmd(&config::compare_config(args, &file, seed()?)?)?.write(),
        Command::Eval(args) => {
            let report = commands::eval(&args.model, &args.data)?;
            let mut json = serde_json::to_string_pretty(&report)?;
            json.push('\n');
            match &args.out {
                Some(path) => {
                    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                        std::fs::create_dir_all(dir)?;
                    }
                    std::fs::write(path, json)?;
                }
                None => print!("{json}"),
            }
            Ok(())
        }
    }
}

/// Maps an error from [`run`] to the process exit status.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    if err.is::<UsageError>() {
        EXIT_USAGE
    } else {
        EXIT_FAILURE
    }
}

mod args;
mod commands;
mod output;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();

    let result = match &cli.command {
        Command::Score(a) => commands::score(a),
        Command::Wals(a) => commands::wals(a),
        Command::Report(a) => commands::report(a),
        Command::Cluster(a) => commands::cluster(a),
        Command::Optimize(a) => commands::optimize(a),
        Command::Spi(a) => commands::spi(a),
    };
    match result {
        Ok(outcome) if outcome.gate_tripped => {
            log::warn!("{}: at least one stereotype verdict is true", cli.command.name());
            ExitCode::from(2)
        }
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

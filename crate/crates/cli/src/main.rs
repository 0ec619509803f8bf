mod args;
mod commands;
mod config;

use clap::Parser;

use args::{Cli, Command};

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Binarize(cmd) => commands::run_binarize(cmd),
        Command::Encode(cmd) => commands::run_encode(cmd),
        Command::Train(cmd) => commands::run_train(cmd),
        Command::Predict(cmd) => commands::run_predict(cmd),
        Command::Evaluate(cmd) => commands::run_evaluate(cmd),
        Command::Curve(cmd) => commands::run_curve(cmd),
    };
    if let Err(e) = result {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

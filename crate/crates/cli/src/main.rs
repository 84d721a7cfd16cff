use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("HYPERMIN_LOG", "warn")).init();
    let cli = hypermin::Cli::parse();
    ExitCode::from(hypermin::run(&cli))
}

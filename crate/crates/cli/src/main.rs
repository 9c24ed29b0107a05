use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use eulerize::cli::Cli;
use eulerize::{commands, exec};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            // usage errors are input errors; 2 is reserved for undecided runs
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match exec::init_threads() {
        Ok(n) => log::debug!("{n} worker threads"),
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(1);
        }
    }
    match commands::run(&cli) {
        Ok(rep) => {
            log::info!("{} finished: {:?}", rep.command, rep.status);
            ExitCode::from(rep.status.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

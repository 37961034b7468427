use std::process::ExitCode;

use clap::Parser;

mod args;
mod commands;

use args::Cli;

/// Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric failure.
fn exit_code(err: &capforge::Error) -> u8 {
    use capforge::Error::*;
    match err {
        InvalidConfig(_) => 1,
        NonFiniteGradient(_) => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(cli.log_level()))
        .format_timestamp(None)
        .init();
    match commands::run(cli) {
        Ok(commands::Outcome::Success) => ExitCode::SUCCESS,
        Ok(commands::Outcome::Failed(code)) => ExitCode::from(code),
        // a closed pipe (e.g. `| head`) is not an error
        Err(capforge::Error::Io { ref source, .. }) if source.kind() == std::io::ErrorKind::BrokenPipe => {
            ExitCode::SUCCESS
        }
        Err(e) => {
            log::error!("{e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

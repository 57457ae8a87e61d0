use std::io::Write;
use std::process::ExitCode;

use trunctail_cli::{run, CliError};

fn main() -> ExitCode {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    match run(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Help(text)) => {
            let _ = write!(stdout.lock(), "{text}");
            ExitCode::SUCCESS
        }
        Err(err) => {
            let _ = writeln!(stderr.lock(), "{}", err.render());
            ExitCode::FAILURE
        }
    }
}

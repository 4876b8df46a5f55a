use std::io::Write;
use std::process::ExitCode;

use aoi_hetero::cli::{error_line, execute, exit_code, RunSpec};
use clap::Parser;

fn main() -> ExitCode {
    let spec = RunSpec::parse();
    match execute(&spec) {
        Ok(Some(text)) => {
            let mut out = std::io::stdout().lock();
            if out.write_all(text.as_bytes()).is_err() {
                return ExitCode::from(5);
            }
            ExitCode::SUCCESS
        }
        Ok(None) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("{}", error_line(&err));
            ExitCode::from(exit_code(&err) as u8)
        }
    }
}

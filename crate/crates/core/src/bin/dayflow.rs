//! Thin binary shell; all logic lives in [`dayflow::cli`].

use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(dayflow::cli::run() as u8)
}

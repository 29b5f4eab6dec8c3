use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(repclass_core::cli::run())
}

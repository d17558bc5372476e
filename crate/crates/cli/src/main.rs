use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(shs_cli::run(std::env::args().skip(1)))
}

use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(bnhqc_cli::run(std::env::args_os()))
}

use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(privlocker_cli::run(std::env::args_os()))
}

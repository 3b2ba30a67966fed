use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(gridloc::cli::run(std::env::args_os()))
}

use std::process::ExitCode;

fn main() -> ExitCode {
    qwalk::cli::run_from(std::env::args_os())
}

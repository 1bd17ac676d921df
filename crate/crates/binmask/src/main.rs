use std::process::ExitCode;

fn main() -> ExitCode {
    binmask::cli::run(std::env::args_os())
}

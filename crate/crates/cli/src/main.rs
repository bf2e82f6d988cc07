use std::process::ExitCode;

fn main() -> ExitCode {
    trendgate::cli::run(std::env::args_os())
}

use std::process::ExitCode;

fn main() -> ExitCode {
    faultrace::cli::run()
}

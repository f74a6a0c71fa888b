use std::process::ExitCode;

fn main() -> ExitCode {
    trackmark_server::cli::main()
}

use std::process::ExitCode;

fn main() -> ExitCode {
    rpncheck::cli::main()
}

use std::process::ExitCode;

fn main() -> ExitCode {
    wedgelift::cli::main()
}

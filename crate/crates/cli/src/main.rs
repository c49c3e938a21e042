use std::process::ExitCode;

fn main() -> ExitCode {
    scenebm_cli::main_from(std::env::args_os())
}

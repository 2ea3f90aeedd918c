use std::process::ExitCode;

fn main() -> ExitCode {
    limitlens::main_with(std::env::args_os())
}

use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(skijudge_cli::execute(std::env::args_os(), &mut std::io::stdout()))
}

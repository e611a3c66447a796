use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = bosamp_cli::commands::Cli::parse();
    let stdout = std::io::stdout();
    match bosamp_cli::commands::execute(cli, &mut stdout.lock()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

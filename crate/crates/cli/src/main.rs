use std::process::ExitCode;

use clap::Parser;
use pwphase_cli::commands::{run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut stdout = std::io::stdout().lock();
    match run(cli, &mut stdout) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("pwphase: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

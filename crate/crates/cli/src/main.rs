use std::process::ExitCode;

use clap::Parser;
use qdyn_cli::{execute, resolve_config, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = resolve_config(&cli.common).and_then(|cfg| execute(cli.command, &cfg));
    match result {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("qdyn {}: {e}", cli.command.name());
            ExitCode::from(e.exit_code())
        }
    }
}

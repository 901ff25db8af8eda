use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = match mala_lab::Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { mala_lab::EXIT_CONFIG } else { mala_lab::EXIT_OK });
        }
    };
    ExitCode::from(mala_lab::execute(cli))
}

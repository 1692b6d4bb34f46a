use std::process::ExitCode;

use clap::Parser;
use qwalk::config::{resolve, Cli};
use qwalk::experiment::run_experiment;
use qwalk::{ConfigError, RunError};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    let result = resolve(&cli)
        .map_err(RunError::from)
        .and_then(|cfg| run_experiment(&cfg).map(|s| (cfg, s)));
    match result {
        Ok((cfg, summary)) => {
            for note in &summary.notes {
                eprintln!("{note}");
            }
            eprintln!("wrote {} files to {}", summary.files.len(), cfg.out.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            match &e {
                RunError::Config(ConfigError::Usage(msg)) => eprintln!("{msg}"),
                _ => eprintln!("qwalk: {e}"),
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use serde_json::json;
use vitscope::cli::Cli;
use vitscope::commands::execute;
use vitscope::error::{EXIT_INTERNAL, EXIT_USAGE};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let message = e.render().to_string();
            eprintln!(
                "{}",
                json!({"error": "UsageError", "exit_code": EXIT_USAGE, "message": message.trim_end()})
            );
            return ExitCode::from(EXIT_USAGE as u8);
        }
    };
    match std::panic::catch_unwind(|| execute(&cli)) {
        Ok(Ok(_)) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
        Err(panic) => {
            let message = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            eprintln!(
                "{}",
                json!({"error": "InternalError", "exit_code": EXIT_INTERNAL, "message": message})
            );
            ExitCode::from(EXIT_INTERNAL as u8)
        }
    }
}

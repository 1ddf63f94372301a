use std::process::ExitCode;

use clap::Parser;
use kernbayes_cli::args::Cli;
use kernbayes_cli::error::{Category, CliError};

const THREADS_VAR: &str = "KERNBAYES_THREADS";

fn init_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| CliError::usage(format!("expected a positive integer, got '{raw}'")).at(THREADS_VAR))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::internal(e.to_string()).at(THREADS_VAR))
}

fn main() -> ExitCode {
    std::panic::set_hook(Box::new(|info| {
        let loc = info.location().map(|l| format!(" {}:{}", l.file(), l.line())).unwrap_or_default();
        let msg = info
            .payload()
            .downcast_ref::<&str>()
            .map(|s| s.to_string())
            .or_else(|| info.payload().downcast_ref::<String>().cloned())
            .unwrap_or_else(|| "panic".to_string());
        eprintln!("error[{}]{loc}: {msg}", Category::Internal.label());
    }));

    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { Category::Usage.exit_code() } else { 0 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    let result = init_threads().and_then(|()| {
        std::panic::catch_unwind(|| kernbayes_cli::run(cli))
            .unwrap_or_else(|_| Err(CliError::internal("unexpected panic")))
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

mod config;
mod run;

use std::process::ExitCode;

use config::{parse_config, ParseOutcome};

fn main() -> ExitCode {
    let cfg = match parse_config(std::env::args_os()) {
        Ok(cfg) => cfg,
        Err(ParseOutcome::Clap(e)) => {
            // --help / --version land here too and exit 0
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
        Err(ParseOutcome::Usage(e)) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };

    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cfg.threads).build() {
        Ok(pool) => pool,
        Err(e) => {
            eprintln!("error: cannot start worker threads: {e}");
            return ExitCode::from(1);
        }
    };
    match pool.install(|| run::execute(&cfg)) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

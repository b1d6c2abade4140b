use clap::Parser;
use concept_core::cli::{error_report, exit_code, run, Cli};

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if e.use_stderr() => {
            let _ = e.print();
            std::process::exit(3);
        }
        Err(e) => {
            let _ = e.print();
            std::process::exit(0);
        }
    };
    match run(&cli, std::env::vars()) {
        Ok(summary) => println!("{summary}"),
        Err(e) => {
            eprintln!("{}", error_report(&e));
            std::process::exit(exit_code(&e));
        }
    }
}

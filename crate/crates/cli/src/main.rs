use clap::Parser;
use rfisst_cli::{execute, Cli, Command};
use std::process::ExitCode;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let Command::Run(args) = cli.command;
    if let Some(n) = args.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("rfisst: cannot size the thread pool: {e}");
            return ExitCode::from(1);
        }
    }
    match execute(&args) {
        Ok(outcome) => {
            println!("{}", outcome.summary);
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("rfisst: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

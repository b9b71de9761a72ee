use clap::Parser;
use plurirand_cli::{execute, Cli, WORKERS_ENV};

fn main() {
    let cli = Cli::parse();
    let workers = std::env::var(WORKERS_ENV).ok();
    let code = execute(&cli, workers.as_deref(), &mut std::io::stdout(), &mut std::io::stderr());
    std::process::exit(code);
}

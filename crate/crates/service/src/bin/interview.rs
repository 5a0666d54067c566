use std::io;

use clap::Parser;
use interview_service::cli::{run, Cli, Io};
use tracing_subscriber::EnvFilter;

fn main() {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_env("INTERVIEW_LOG").unwrap_or_else(|_| EnvFilter::new("warn")))
        .with_writer(io::stderr)
        .init();
    let cli = Cli::parse();
    let stdin = io::stdin();
    let code = run(
        cli,
        &mut Io {
            out: &mut io::stdout().lock(),
            err: &mut io::stderr(),
            input: &mut stdin.lock(),
        },
    );
    std::process::exit(code);
}

use std::io;
use std::process::ExitCode;

use clap::Parser;
use hdr_cli::{run, Cli};

fn configure_threads() {
    let Ok(v) = std::env::var("HDR_THREADS") else { return };
    match v.trim().parse::<usize>() {
        Ok(n) if n > 0 => {
            if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                eprintln!("warning: HDR_THREADS ignored: {e}");
            }
        }
        _ => eprintln!("warning: HDR_THREADS must be a positive integer, got {v:?}"),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    configure_threads();
    let mut out = io::stdout().lock();
    let mut log = io::stderr().lock();
    match run(&cli, &mut out, &mut log) {
        Ok(status) => ExitCode::from(status.exit_code() as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

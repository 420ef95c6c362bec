use clap::Parser;

use dynpoint::cli::{run, Cli};
use dynpoint::Error;

fn main() {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        // best effort; a pool may already exist in test harnesses
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
    match run(&cli) {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {e}");
            let code = if matches!(e, Error::Config(_)) { 2 } else { 1 };
            std::process::exit(code);
        }
    }
}

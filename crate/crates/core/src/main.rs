use std::process::ExitCode;

use clap::Parser;
use shardscreen::cli::{self, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = std::env::var("SHARDSCREEN_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n > 0)
    {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match cli::run(cli) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

use clap::Parser;

use anw_core::cli::{run, Cli};

fn main() {
    let cli = Cli::parse();
    if let Err(err) = run(&cli) {
        eprintln!("anw: {err}");
        std::process::exit(err.exit_code());
    }
}

use clap::Parser;
use jtsmc_cli::{run, Cli};

fn main() {
    if let Err(e) = run(Cli::parse()) {
        eprintln!("jtsmc: {e}");
        std::process::exit(e.exit_code());
    }
}

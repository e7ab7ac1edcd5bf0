use clap::Parser;
use grandab_cli::{run, Cli};

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(&cli) {
        eprintln!("grandab: {e}");
        std::process::exit(e.exit_code());
    }
}

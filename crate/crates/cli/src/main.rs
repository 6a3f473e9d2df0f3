use clap::Parser;
use linhsic_cli::args::Cli;

fn main() {
    let cli = Cli::parse();
    if let Err(e) = linhsic_cli::run(&cli) {
        eprintln!("error[{}]: {e}", e.code());
        std::process::exit(e.exit_code());
    }
}

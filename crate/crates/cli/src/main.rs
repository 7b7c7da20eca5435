use clap::Parser;

fn main() {
    let cli = ksat_cli::Cli::parse();
    if let Err(e) = ksat_cli::run(cli) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

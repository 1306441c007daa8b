use clap::Parser;

fn main() {
    let cli = aucmax_cli::Cli::parse();
    if let Err(err) = aucmax_cli::run(&cli) {
        eprintln!("error: {err:#}");
        std::process::exit(aucmax_cli::exit_code(&err));
    }
}

use clap::Parser;

fn main() {
    let cli = eic_cli::Cli::parse();
    std::process::exit(eic_cli::main_with(&cli));
}

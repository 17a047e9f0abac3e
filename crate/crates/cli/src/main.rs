use clap::Parser;

fn main() {
    let cli = pdem_cli::config::Cli::parse();
    std::process::exit(pdem_cli::execute(cli));
}

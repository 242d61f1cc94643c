use clap::Parser;

fn main() {
    let cli = qvsolve::cli::Cli::parse();
    std::process::exit(qvsolve::cli::run(&cli));
}

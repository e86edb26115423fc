use clap::Parser;

fn main() {
    let cli = copronet::cli::Cli::parse();
    if let Err(err) = copronet::cli::execute(cli) {
        eprintln!("error: {err}");
        std::process::exit(err.exit_code());
    }
}

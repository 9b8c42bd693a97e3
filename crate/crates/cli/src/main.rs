use clap::Parser;

fn main() {
    let cli = edpcgrl_cli::Cli::parse();
    if let Err(err) = edpcgrl_cli::run(cli) {
        eprintln!("error: {err:#}");
        std::process::exit(edpcgrl_cli::exit_code(&err));
    }
}

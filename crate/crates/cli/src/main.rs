use clap::Parser;
use koopspec_cli::{configure_threads, run, Cli};

fn main() {
    let cli = Cli::parse();
    let outcome = configure_threads(cli.threads).and_then(|_| run(cli));
    if let Err(e) = outcome {
        eprintln!("koopspec: {e}");
        std::process::exit(e.exit_code());
    }
}

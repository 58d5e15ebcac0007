use clap::Parser;
use pircon::cli::{run, Cli};

fn main() {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("pircon: {e}");
            std::process::exit(e.exit_code());
        }
    }
}

use clap::Parser;

fn main() {
    let cli = exogate_cli::Cli::parse();
    match exogate_cli::execute(cli) {
        Ok(()) => {}
        Err(e) => {
            eprintln!("{}", e.message);
            std::process::exit(e.code);
        }
    }
}

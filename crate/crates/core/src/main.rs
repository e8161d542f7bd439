use clap::Parser;

fn main() {
    let cli = gui_reasoner::cli::Cli::parse();
    if let Err(e) = gui_reasoner::cli::run(cli) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

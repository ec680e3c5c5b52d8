use clap::Parser;
use shadowkit::cli::{main_with, Cli};

fn main() {
    std::process::exit(main_with(Cli::parse()));
}

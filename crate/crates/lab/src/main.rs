use clap::Parser;
use dirichlet_lab::cli::{run, Cli};

fn main() {
    std::process::exit(run(Cli::parse()));
}

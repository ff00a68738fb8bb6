use std::process;

fn main() {
    process::exit(entrain_cli::run(std::env::args()));
}

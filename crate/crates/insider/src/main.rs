use std::process::exit;

fn main() {
    exit(insider::cli::run(std::env::args_os()));
}

fn main() {
    std::process::exit(activescore::cli::run(std::env::args_os()));
}

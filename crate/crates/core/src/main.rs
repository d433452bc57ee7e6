fn main() {
    std::process::exit(decaylab::cli::run(std::env::args_os()));
}

fn main() {
    std::process::exit(translator_lab::cli::run(std::env::args()));
}

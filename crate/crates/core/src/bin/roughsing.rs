fn main() {
    std::process::exit(roughsing::cli::run(std::env::args_os()));
}

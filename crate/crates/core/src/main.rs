fn main() {
    std::process::exit(gsgi::cli::run(std::env::args_os()));
}

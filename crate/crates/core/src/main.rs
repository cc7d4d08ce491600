fn main() {
    std::process::exit(cvcsp::cli::run(std::env::args_os()));
}

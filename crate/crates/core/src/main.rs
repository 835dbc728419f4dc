fn main() {
    std::process::exit(wiprates::cli::run(std::env::args_os()));
}

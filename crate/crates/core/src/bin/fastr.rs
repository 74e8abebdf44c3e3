fn main() {
    std::process::exit(fastr::cli::run(std::env::args_os()));
}

fn main() {
    std::process::exit(eigenshrink::cli::run(std::env::args_os()));
}

fn main() {
    std::process::exit(ktforge::cli::run(std::env::args_os()));
}

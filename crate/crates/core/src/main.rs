fn main() {
    std::process::exit(prodrel::cli::run(std::env::args_os()));
}

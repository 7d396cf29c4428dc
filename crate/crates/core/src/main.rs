fn main() {
    std::process::exit(idem::cli::run(std::env::args_os()));
}

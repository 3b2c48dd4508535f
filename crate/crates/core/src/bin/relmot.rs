fn main() {
    std::process::exit(relmot::cli::run(std::env::args_os()));
}

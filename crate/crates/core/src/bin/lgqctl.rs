fn main() {
    std::process::exit(lgq_core::cli::run(std::env::args_os()));
}

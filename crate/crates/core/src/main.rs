fn main() {
    std::process::exit(robustmap::cli::run(std::env::args_os()));
}

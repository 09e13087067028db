fn main() {
    std::process::exit(cusum_lab::cli::run(std::env::args_os()));
}

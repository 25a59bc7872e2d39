fn main() {
    std::process::exit(irsopt::cli::run_from_args(std::env::args_os()));
}

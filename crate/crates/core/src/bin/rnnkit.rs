fn main() {
    std::process::exit(rnnkit::cli::run_cli(std::env::args_os()));
}

fn main() {
    std::process::exit(exwave::cli::run(std::env::args_os()));
}

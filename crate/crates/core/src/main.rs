fn main() {
    std::process::exit(nimbus::cli::run(std::env::args_os()));
}

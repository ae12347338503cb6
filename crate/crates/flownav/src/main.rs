fn main() {
    std::process::exit(flownav::cli::run(std::env::args_os()));
}

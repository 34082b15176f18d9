fn main() {
    std::process::exit(isosr::cli::run(std::env::args_os()));
}

fn main() {
    std::process::exit(minsurf::cli::run(std::env::args_os()));
}

fn main() {
    std::process::exit(symbill::cli::run(std::env::args_os()));
}

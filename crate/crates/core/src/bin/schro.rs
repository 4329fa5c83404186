fn main() {
    std::process::exit(schro_core::cli::run(std::env::args_os()));
}

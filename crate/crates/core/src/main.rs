fn main() {
    std::process::exit(dsbeta::cli::run(std::env::args_os()));
}

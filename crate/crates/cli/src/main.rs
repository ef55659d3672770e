fn main() {
    std::process::exit(ppcsat_cli::run(std::env::args_os()));
}

fn main() {
    std::process::exit(pdlc::cli::main_with_args(std::env::args_os()));
}

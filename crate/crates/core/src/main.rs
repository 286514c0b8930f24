fn main() {
    std::process::exit(loopdyn::cli::main_with_args(std::env::args_os()));
}

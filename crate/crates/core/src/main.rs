fn main() {
    std::process::exit(isgraph::cli::main_with_args(std::env::args_os()));
}

fn main() {
    std::process::exit(lyre::cli::main_with_args(std::env::args_os()));
}

fn main() {
    std::process::exit(choquard::cli::main_with_args(std::env::args_os()));
}

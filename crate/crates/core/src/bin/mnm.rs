fn main() {
    std::process::exit(mnm::cli::main_with_args(std::env::args_os()));
}

fn main() {
    std::process::exit(mcflow::cli::main_with_args(std::env::args_os()));
}

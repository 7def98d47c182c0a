fn main() {
    std::process::exit(fanlex::cli::main_with_args(std::env::args_os()));
}

fn main() {
    std::process::exit(heisenberg_polymer::cli::main_with_args(std::env::args_os()));
}

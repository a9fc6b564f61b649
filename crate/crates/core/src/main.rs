fn main() {
    std::process::exit(algoforge::cli::main_with_args(std::env::args_os()));
}

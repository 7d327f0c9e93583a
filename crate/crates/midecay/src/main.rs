fn main() {
    std::process::exit(midecay::cli::main_with_args(std::env::args_os()));
}

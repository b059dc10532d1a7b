fn main() {
    std::process::exit(sensory_cli::main_with_args(std::env::args_os()));
}

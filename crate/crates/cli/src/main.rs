fn main() {
    std::process::exit(perforated_cli::main_with_args(std::env::args_os()));
}

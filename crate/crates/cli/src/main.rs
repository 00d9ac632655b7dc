fn main() {
    std::process::exit(goat_cli::main_with_args(std::env::args_os()));
}

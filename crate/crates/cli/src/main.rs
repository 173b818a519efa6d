fn main() {
    std::process::exit(meshless_cli::cli::main_with_args(std::env::args_os()));
}

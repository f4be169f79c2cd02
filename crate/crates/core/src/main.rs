fn main() {
    std::process::exit(guanzero::cli::main_with_args(std::env::args_os()));
}

fn main() {
    std::process::exit(multispike::cli::main_with_args(std::env::args_os()));
}

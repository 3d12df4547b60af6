fn main() {
    std::process::exit(swexp::cli::main_with_args(std::env::args_os()));
}

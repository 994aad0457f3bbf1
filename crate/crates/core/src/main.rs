fn main() {
    std::process::exit(hypcycle::cli::main_with_args(std::env::args_os()));
}

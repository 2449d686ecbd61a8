fn main() {
    std::process::exit(hk_gauge::cli::main_with_args(std::env::args_os()));
}

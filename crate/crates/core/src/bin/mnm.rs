fn main() {
    std::process::exit(mnm_core::cli::main_with_args(std::env::args_os()));
}

fn main() {
    std::process::exit(wspd_cli::main_with_args(std::env::args_os()));
}

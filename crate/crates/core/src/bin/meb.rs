fn main() {
    std::process::exit(meb::harness::cli::main_with_args(std::env::args_os()));
}

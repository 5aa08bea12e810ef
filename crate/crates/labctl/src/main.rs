fn main() {
    std::process::exit(labctl::main_with_args(std::env::args_os()));
}

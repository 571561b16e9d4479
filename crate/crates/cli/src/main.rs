fn main() {
    std::process::exit(gsa_cli::main_with(std::env::args_os()));
}

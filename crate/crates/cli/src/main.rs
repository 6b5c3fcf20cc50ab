fn main() {
    std::process::exit(ccfom_cli::main_with(std::env::args_os()));
}

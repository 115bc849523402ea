fn main() {
    std::process::exit(hamming_boot_cli::main_with_args(std::env::args_os()));
}

fn main() {
    std::process::exit(quantized_mmse::cli::run(std::env::args_os()));
}

fn main() {
    std::process::exit(thermoq::cli::main_with_args(std::env::args_os()));
}

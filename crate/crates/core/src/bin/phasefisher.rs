fn main() {
    std::process::exit(phasefisher::cli::main_with_args(std::env::args_os()));
}

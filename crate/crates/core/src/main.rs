fn main() {
    std::process::exit(dtvw::cli::main_with_args(std::env::args_os()));
}

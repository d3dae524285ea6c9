fn main() {
    std::process::exit(eikonal_lab::cli::main_with_args(std::env::args_os()));
}

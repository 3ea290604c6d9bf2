fn main() {
    std::process::exit(winning_sets::cli::main_with_args(std::env::args_os()));
}

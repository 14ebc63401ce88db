fn main() {
    std::process::exit(chordhmm::cli::main_with_args(std::env::args_os()));
}

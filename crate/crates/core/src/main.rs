fn main() {
    std::process::exit(rtimpute::cli::main_with_args());
}

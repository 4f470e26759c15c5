fn main() {
    std::process::exit(resonancedb::cli::main_with_stdio());
}

fn main() {
    std::process::exit(ksw::cli::main());
}

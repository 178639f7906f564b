fn main() {
    std::process::exit(deodata::cli::main());
}

fn main() {
    std::process::exit(tfisher::cli::main());
}

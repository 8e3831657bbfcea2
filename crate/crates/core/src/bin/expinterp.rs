fn main() {
    std::process::exit(expinterp::cli::main());
}

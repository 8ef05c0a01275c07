fn main() {
    std::process::exit(gnnlab::cli::run());
}

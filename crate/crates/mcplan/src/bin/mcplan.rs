fn main() {
    std::process::exit(mcplan::cli::run());
}

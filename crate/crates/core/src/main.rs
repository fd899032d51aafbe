fn main() {
    std::process::exit(freebrown::cli::run());
}

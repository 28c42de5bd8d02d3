fn main() {
    std::process::exit(siddmd::cli::run());
}

fn main() {
    std::process::exit(spooky_cli::run());
}

fn main() {
    std::process::exit(expansion_cli::run());
}

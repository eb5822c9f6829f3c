fn main() {
    std::process::exit(papdyn_cli::run());
}

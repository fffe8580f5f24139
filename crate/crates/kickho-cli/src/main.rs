fn main() {
    std::process::exit(kickho_cli::run(std::env::args().skip(1)));
}

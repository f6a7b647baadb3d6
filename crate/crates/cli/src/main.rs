fn main() {
    std::process::exit(dotreg_cli::run(std::env::args().collect()));
}

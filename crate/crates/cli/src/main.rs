fn main() {
    std::process::exit(schoensdr_cli::run(std::env::args_os()));
}

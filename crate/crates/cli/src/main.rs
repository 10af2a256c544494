fn main() {
    std::process::exit(seca_cli::run(std::env::args_os()));
}

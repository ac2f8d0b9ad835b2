fn main() {
    std::process::exit(agar_cli::run(std::env::args_os()));
}

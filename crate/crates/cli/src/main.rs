fn main() {
    std::process::exit(livsic_cli::run(std::env::args_os()));
}

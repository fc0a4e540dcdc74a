fn main() {
    std::process::exit(popmine_cli::run(std::env::args_os()));
}

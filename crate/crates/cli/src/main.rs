fn main() {
    std::process::exit(rmab_cli::run(std::env::args_os()));
}

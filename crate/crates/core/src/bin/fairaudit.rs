fn main() {
    std::process::exit(fairaudit::cli::run(std::env::args_os()));
}

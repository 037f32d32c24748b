fn main() {
    std::process::exit(semiwalk::cli::run(std::env::args_os()));
}

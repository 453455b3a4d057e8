fn main() {
    std::process::exit(spduff::cli::run(std::env::args_os()));
}

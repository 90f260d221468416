fn main() {
    std::process::exit(shellsep::cli::run(std::env::args_os()));
}

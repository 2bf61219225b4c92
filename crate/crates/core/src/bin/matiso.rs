fn main() {
    std::process::exit(matiso::cli::run(std::env::args_os()));
}

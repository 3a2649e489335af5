fn main() {
    std::process::exit(resim::cli::run(std::env::args_os()))
}

fn main() {
    std::process::exit(bmg::cli::run(std::env::args_os()));
}

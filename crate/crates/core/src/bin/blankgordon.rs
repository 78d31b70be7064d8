fn main() {
    std::process::exit(blankgordon::cli::run(std::env::args_os()));
}

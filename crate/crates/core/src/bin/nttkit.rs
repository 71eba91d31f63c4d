fn main() {
    std::process::exit(nttkit::cli::run(std::env::args_os()));
}

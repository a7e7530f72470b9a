fn main() {
    std::process::exit(videomix::cli::run(std::env::args_os()));
}

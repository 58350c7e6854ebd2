fn main() {
    std::process::exit(qndsim::cli::run(std::env::args_os()));
}

fn main() {
    std::process::exit(quadnet::cli::run(std::env::args_os()));
}

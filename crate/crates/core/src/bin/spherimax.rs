fn main() {
    std::process::exit(spherimax::cli::run(std::env::args_os()));
}

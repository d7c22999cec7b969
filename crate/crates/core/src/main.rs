fn main() {
    std::process::exit(eqlab::cli::run(std::env::args_os()));
}

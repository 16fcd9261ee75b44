fn main() {
    std::process::exit(clustinit::cli::run(std::env::args_os()));
}

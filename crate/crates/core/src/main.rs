fn main() {
    std::process::exit(socioclimate::cli::run(std::env::args_os()));
}

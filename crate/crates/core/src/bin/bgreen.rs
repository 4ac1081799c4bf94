fn main() {
    std::process::exit(boltzmann_green::cli::run(std::env::args_os()));
}

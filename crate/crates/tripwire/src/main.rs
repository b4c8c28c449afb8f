fn main() {
    std::process::exit(tripwire::cli::run(std::env::args_os()));
}

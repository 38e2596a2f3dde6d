fn main() {
    std::process::exit(remfx::cli::run(std::env::args_os()));
}

fn main() {
    std::process::exit(cyberins_cli::run(std::env::args_os()));
}

fn main() {
    std::process::exit(magicsim_cli::run(std::env::args_os()));
}

fn main() {
    std::process::exit(ruinlab_cli::run(std::env::args_os()));
}

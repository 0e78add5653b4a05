fn main() {
    std::process::exit(cteleport::cli::run_cli(std::env::args_os()));
}

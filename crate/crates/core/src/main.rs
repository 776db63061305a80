fn main() {
    std::process::exit(panelband::cli::run_from(std::env::args_os()));
}

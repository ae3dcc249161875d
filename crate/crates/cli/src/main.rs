fn main() {
    std::process::exit(chimag_cli::dispatch(std::env::args_os()));
}

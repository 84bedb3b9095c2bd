fn main() {
    std::process::exit(ward_monitor::cli::run(std::env::args_os()));
}

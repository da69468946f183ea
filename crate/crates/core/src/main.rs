fn main() {
    env_logger::init();
    std::process::exit(curesim::cli::run_cli(std::env::args()));
}

fn main() {
    env_logger::init();
    std::process::exit(pathmon_cli::run());
}

fn main() {
    std::process::exit(fsm_core::cli::run(std::env::args_os()));
}

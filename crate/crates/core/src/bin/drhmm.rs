fn main() -> std::process::ExitCode {
    drhmm::cli::main_with_args(std::env::args_os())
}

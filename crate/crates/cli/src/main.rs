fn main() -> std::process::ExitCode {
    ptqgt::commands::main_with_args(std::env::args_os())
}

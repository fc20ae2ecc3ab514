fn main() -> std::process::ExitCode {
    cutfem1d::cli::main_with_args(std::env::args_os())
}

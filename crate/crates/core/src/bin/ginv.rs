fn main() -> std::process::ExitCode {
    ginv::cli::main()
}

fn main() -> std::process::ExitCode {
    toolrank::cli::main()
}

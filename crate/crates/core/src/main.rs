fn main() -> std::process::ExitCode {
    ndglcm::cli::main()
}

fn main() -> std::process::ExitCode {
    symind::cli::main()
}

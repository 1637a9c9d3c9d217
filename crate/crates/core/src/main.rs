fn main() -> std::process::ExitCode {
    decolab::cli::main()
}

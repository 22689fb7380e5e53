fn main() -> std::process::ExitCode {
    coherent_fingerprint::cli::main()
}

fn main() -> std::process::ExitCode {
    fslang::cli::main()
}

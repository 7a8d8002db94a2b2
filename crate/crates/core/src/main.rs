fn main() -> std::process::ExitCode {
    dyadic::cli::main()
}

fn main() -> std::process::ExitCode {
    qinterp::run()
}

fn main() -> std::process::ExitCode {
    rayleigh_fwmdn::cli::run()
}

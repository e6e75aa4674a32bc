fn main() -> std::process::ExitCode {
    mprod_bench::run(std::env::args_os())
}

fn main() {
    std::process::exit(spectrafw::bench::run_cli(std::env::args_os()));
}

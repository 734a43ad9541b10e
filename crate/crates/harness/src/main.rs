fn main() {
    std::process::exit(magrelax_harness::cli::run(std::env::args_os()));
}

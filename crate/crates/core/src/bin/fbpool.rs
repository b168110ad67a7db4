fn main() {
    std::process::exit(fbpool_core::harness::cli_main(std::env::args_os()));
}

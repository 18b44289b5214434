fn main() {
    std::process::exit(spatial_bench::cli::run_cli(std::env::args_os()));
}

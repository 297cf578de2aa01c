fn main() {
    std::process::exit(vortex_waves::cli::run(std::env::args_os()));
}

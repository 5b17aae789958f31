fn main() {
    std::process::exit(vck::cli::run(std::env::args_os()));
}

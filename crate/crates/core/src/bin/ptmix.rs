fn main() {
    std::process::exit(ptmix::cli::run(std::env::args_os()));
}

fn main() {
    std::process::exit(pulseseq::cli::run(std::env::args_os()));
}

fn main() {
    std::process::exit(rss_align::harness::cli::run(std::env::args_os()));
}

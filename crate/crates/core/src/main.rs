fn main() {
    std::process::exit(sparse_nls::cli::run(std::env::args_os()));
}

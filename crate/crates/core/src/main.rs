fn main() {
    std::process::exit(pseudo_pca::cli::run(std::env::args_os()));
}

fn main() {
    std::process::exit(hbapprox::cli::run());
}

fn main() {
    std::process::exit(dbtopo::cli::run());
}

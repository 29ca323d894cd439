fn main() { expray::cli::run() }

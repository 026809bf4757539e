fn main() {
    std::process::exit(stable_sup::cli::run() as i32)
}

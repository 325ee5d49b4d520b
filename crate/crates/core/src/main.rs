fn main() {
    std::process::exit(dmimo_sim::cli::run());
}

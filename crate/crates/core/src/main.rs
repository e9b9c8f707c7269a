fn main() {
    std::process::exit(metric_bandits::cli::main());
}

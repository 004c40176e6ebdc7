fn main() {
    std::process::exit(presto_sim::cli::main());
}

fn main() {
    std::process::exit(opseq::cli::run());
}

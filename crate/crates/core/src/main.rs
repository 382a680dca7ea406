fn main() {
    std::process::exit(diarconf::cli::main());
}

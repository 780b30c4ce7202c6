fn main() {
    std::process::exit(moranlab::cli::main_entry());
}

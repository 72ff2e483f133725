fn main() {
    std::process::exit(secure_pac::cli::main_entry());
}

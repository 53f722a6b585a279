fn main() {
    std::process::exit(compc_cli::main_with(std::env::args()));
}

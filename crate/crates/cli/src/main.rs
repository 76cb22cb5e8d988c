fn main() {
    std::process::exit(sel_cli::run(std::env::args_os()));
}

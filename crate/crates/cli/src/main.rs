fn main() {
    std::process::exit(qbattery_cli::main_with_args(std::env::args_os()));
}

fn main() {
    std::process::exit(thermoface_cli::commands::main_with_args(std::env::args_os()));
}

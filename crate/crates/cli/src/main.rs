fn main() {
    std::process::exit(homoclinic_cli::run_from_args(std::env::args_os()));
}

fn main() {
    std::process::exit(hspredict_cli::run(std::env::args_os()));
}

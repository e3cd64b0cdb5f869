fn main() {
    std::process::exit(mtmeval_cli::run(std::env::args_os()));
}

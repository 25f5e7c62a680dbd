fn main() {
    std::process::exit(cqed_berry::cli::run(std::env::args_os()));
}

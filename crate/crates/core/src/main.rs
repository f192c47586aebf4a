fn main() {
    std::process::exit(lhs_attack::cli::cli_main(std::env::args_os()));
}

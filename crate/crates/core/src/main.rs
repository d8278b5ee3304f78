fn main() {
    std::process::exit(lambda_bernstein::cli::run(std::env::args_os()));
}

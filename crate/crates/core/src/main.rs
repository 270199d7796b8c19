fn main() {
    let code = threepoint::cli::dispatch(std::env::args_os());
    std::process::exit(code);
}

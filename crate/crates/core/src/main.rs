fn main() {
    let code = qbsc::cli::dispatch(std::env::args());
    std::process::exit(code);
}

fn main() {
    std::process::exit(istlab::cli::dispatch(std::env::args()));
}

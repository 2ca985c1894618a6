fn main() {
    std::process::exit(maxcorr::cli::dispatch(std::env::args_os()));
}

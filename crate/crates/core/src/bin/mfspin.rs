fn main() {
    std::process::exit(mfspin::cli::run(std::env::args_os()));
}

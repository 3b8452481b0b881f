fn main() {
    std::process::exit(conecalib_cli::run(std::env::args_os()));
}

fn main() {
    std::process::exit(idcurve::cli::run(std::env::args_os()));
}

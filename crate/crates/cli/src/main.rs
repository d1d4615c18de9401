fn main() {
    std::process::exit(sigma_calc::run(std::env::args_os()));
}

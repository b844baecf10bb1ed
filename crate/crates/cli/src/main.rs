fn main() {
    std::process::exit(martlab::run(std::env::args_os()));
}

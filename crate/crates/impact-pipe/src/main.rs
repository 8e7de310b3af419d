fn main() {
    let args: Vec<String> = std::env::args().collect();
    std::process::exit(impact_pipe::cli::run(&args[1..]));
}

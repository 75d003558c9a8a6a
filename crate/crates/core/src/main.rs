fn main() {
    dpnoise::cli::init_logging();
    let code = dpnoise::cli::dispatch(std::env::args_os(), &mut std::io::stdout(), &mut std::io::stderr());
    std::process::exit(code);
}

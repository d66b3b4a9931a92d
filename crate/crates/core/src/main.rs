fn main() {
    let env = std::env::var(seriesjudge::cli::PRECISION_ENV).ok();
    let code = seriesjudge::cli::run(std::env::args_os(), env, &mut std::io::stdout(), &mut std::io::stderr());
    std::process::exit(code);
}

fn main() {
    let host_env = std::env::vars().collect();
    let code = fabcheck::cli::run(std::env::args_os(), host_env, &mut std::io::stdout(), &mut std::io::stderr());
    std::process::exit(code);
}

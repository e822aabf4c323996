fn main() {
    let code = ucp_fem::cli::run(std::env::args_os(), &mut std::io::stdout().lock());
    std::process::exit(code);
}

use std::io;

fn main() {
    lifespan_core::cli::configure_threads();
    let code = lifespan_core::cli::main_with_args(std::env::args_os(), &mut io::stdout(), &mut io::stderr());
    std::process::exit(code);
}

use clap::Parser;
use stratq::{dispatch, RunConfig, EXIT_VALIDATION};

fn main() {
    let config = match RunConfig::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_VALIDATION } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    if let Err(e) = dispatch(&config, &mut out) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}

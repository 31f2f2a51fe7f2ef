use gss_cli::{exit, parse_args, run};

fn main() {
    let cli = match parse_args(std::env::args_os()) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{e}");
            std::process::exit(e.exit_code());
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("GSS_LOG", level)).init();
    match run(cli.command) {
        Ok(m) => {
            for o in &m.outputs {
                println!("{}", o.path.display());
            }
            std::process::exit(exit::OK);
        }
        Err(e) => {
            eprintln!("gss: {e}");
            std::process::exit(e.exit_code());
        }
    }
}

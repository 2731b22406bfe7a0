use std::ffi::OsString;
use std::io;

fn main() {
    let args: Vec<OsString> = std::env::args_os().collect();
    let level = match axerr::cli::verbosity(&args) {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let code = axerr::cli::run(args, &mut io::stdout(), &mut io::stderr());
    std::process::exit(code);
}

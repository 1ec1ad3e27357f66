use std::io::Write;

use hilfer_bvp::cli::{main_with, THREADS_ENV};

fn main() {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    let mut out = stdout.lock();
    let mut err = stderr.lock();
    let code = main_with(std::env::args_os(), std::env::var(THREADS_ENV).ok(), &mut out, &mut err);
    let _ = out.flush();
    let _ = err.flush();
    std::process::exit(code);
}

use std::process::exit;

/// Die quietly when stdout is closed early (e.g. piping into `head`),
/// instead of panicking on the broken pipe.
#[cfg(unix)]
fn restore_sigpipe() {
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
}

#[cfg(not(unix))]
fn restore_sigpipe() {}

fn main() {
    restore_sigpipe();
    let args: Vec<String> = std::env::args().skip(1).collect();
    exit(sizer::cli::run(&args));
}

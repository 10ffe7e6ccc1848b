// SPDX-License-Identifier: MIT OR Apache-2.0

fn main() {
    // Die quietly when stdout is a closed pipe (e.g. `persona ... | head`).
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    env_logger::init();
    std::process::exit(persona::cli::dispatch(std::env::args_os()));
}

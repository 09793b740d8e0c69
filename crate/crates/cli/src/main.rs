use std::process::ExitCode;

fn main() -> ExitCode {
    let threads = std::env::var("PIEZO_LAB_THREADS").ok();
    ExitCode::from(piezo_lab_cli::main_with_args(
        std::env::args_os(),
        threads.as_deref(),
    ))
}

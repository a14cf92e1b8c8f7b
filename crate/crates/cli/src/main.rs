use std::io::Write;
use std::process::ExitCode;

fn main() -> ExitCode {
    let (code, stdout, stderr) = finsler_cli::run_args(std::env::args_os());
    print!("{stdout}");
    let _ = std::io::stdout().flush();
    if !stderr.is_empty() {
        eprint!("{stderr}");
    }
    ExitCode::from(code as u8)
}

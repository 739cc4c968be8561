use std::io;
use std::process::ExitCode;

fn main() -> ExitCode {
    let code = lspace::cli::run(std::env::args_os(), &mut io::stdout().lock(), &mut io::stderr().lock());
    ExitCode::from(code as u8)
}

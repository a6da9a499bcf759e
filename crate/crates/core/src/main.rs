use std::process::ExitCode;

use divcolor::cli::{execute, parse_invocation, EXIT_ERROR};

fn main() -> ExitCode {
    let invocation = match parse_invocation(std::env::args_os()) {
        Ok(inv) => inv,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { 0 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    ExitCode::from(execute(&invocation) as u8)
}

use std::io::{self, Write};
use std::process::ExitCode;

use dascusum::cli;

fn main() -> ExitCode {
    let stdin = io::stdin();
    let stdout = io::stdout();
    let mut out = io::BufWriter::new(stdout.lock());
    let mut err = io::stderr().lock();
    let result = cli::run(std::env::args_os(), &mut stdin.lock(), &mut out, &mut err);
    let flushed = out.flush();
    match result.and(flushed.map_err(Into::into)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            ExitCode::from(cli::exit_code(&e))
        }
    }
}

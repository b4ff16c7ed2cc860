use std::process::ExitCode;

use clap::Parser;

use gphase_cli::args::Cli;

fn main() -> ExitCode {
    // clap exits with status 2 on parse errors and 0 for --help/--version.
    let cli = Cli::parse();
    match gphase_cli::run(&cli) {
        Ok(0) => ExitCode::SUCCESS,
        Ok(failed) if cli.keep_going => {
            eprintln!("gphase: {failed} point(s) failed; see the status column");
            ExitCode::SUCCESS
        }
        Ok(failed) => {
            eprintln!("gphase: {failed} point(s) failed (use --keep-going to accept)");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("gphase: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

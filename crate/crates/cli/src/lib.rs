//! The `popmine` command line. [`run`] takes the full argument list and
//! returns the process exit code: 0 on success, 1 for usage errors, 2 when
//! input data or files are bad.

pub mod args;
pub mod commands;
pub mod config;

use std::ffi::OsString;

use clap::{CommandFactory, FromArgMatches};

pub fn run<I: IntoIterator<Item = OsString>>(args: I) -> i32 {
    let root = args::Cli::command();
    let argv = match config::expand(&root, args.into_iter().collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("popmine: {e}");
            return 1;
        }
    };
    let cli = match root.try_get_matches_from(argv).and_then(|m| args::Cli::from_arg_matches(&m)) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match commands::execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("popmine: {e}");
            e.exit_code()
        }
    }
}

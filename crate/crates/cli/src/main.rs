use std::path::Path;
use std::process::ExitCode;

use clap::Parser;
use twistlab_cli::{print_report, write_report, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (cfg, report) = match cli.execute() {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let written = match &cfg.output.dir {
        Some(dir) => write_report(&report, Path::new(dir)).map(|paths| {
            for p in paths {
                eprintln!("wrote {}", p.display());
            }
        }),
        None => print_report(&report, &mut std::io::stdout().lock(), &mut std::io::stderr().lock())
            .map_err(|e| twistlab_cli::CliError::io(Path::new("<stdout>"), e)),
    };
    match written {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

use std::process::ExitCode;

use clap::Parser;
use nearfield_cli::{run, Cli, RunReport};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("NEARFIELD_LOG", "warn")).init();
    let cli = Cli::parse();
    // Results go to stdout; the run report always goes to stderr as one JSON line.
    let (report, code) = match run(&cli) {
        Ok(r) => (r, 0),
        Err(e) => {
            eprintln!("{e}");
            let code = e.exit_code();
            let command = format!("{:?}", cli.command);
            let name = command.split('(').next().unwrap_or_default().to_lowercase();
            (RunReport::new(&name, String::new()), code)
        }
    };
    eprintln!("{}", RunReport { exit_status: code, ..report }.to_json());
    ExitCode::from(code as u8)
}

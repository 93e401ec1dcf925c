use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use gamma_elliptic::{load_config, run, RunOptions, Status, Task};

/// Surface finite elements for elliptic problems on closed surfaces.
#[derive(Debug, Parser)]
#[command(name = "gamma-elliptic", version)]
struct Cli {
    /// What to run.
    #[arg(value_enum)]
    task: Task,
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides `output.dir`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Serial execution and zeroed timings, for bitwise-reproducible output.
    #[arg(long)]
    deterministic: bool,
    /// Proceed although a well-posedness check fails.
    #[arg(long)]
    override_conditions: bool,
}

fn exit(status: Status) -> ExitCode {
    ExitCode::from(status.code() as u8)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                exit(Status::ParseError)
            } else {
                exit(Status::Ok)
            };
        }
    };
    let cfg = match load_config(&cli.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return exit(e.status());
        }
    };
    let opts = RunOptions {
        out: cli.out,
        deterministic: cli.deterministic,
        override_conditions: cli.override_conditions,
    };
    let outcome = run(cli.task, &cfg, &opts);
    for f in &outcome.files {
        println!("wrote {}", f.display());
    }
    if outcome.status == Status::Ok {
        println!("{}", outcome.message);
    } else {
        eprintln!("error: {}", outcome.message);
    }
    exit(outcome.status)
}

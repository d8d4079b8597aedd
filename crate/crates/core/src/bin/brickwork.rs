use std::path::{Path, PathBuf};
use std::process::ExitCode;

use brickwork::io::{run, RunConfig};
use brickwork::Error;
use clap::Parser;

/// Run one analysis described by a TOML config.
#[derive(Parser)]
#[command(version)]
struct Args {
    #[arg(long)]
    config: PathBuf,
    /// Overrides `seed` in the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides `output_dir` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; defaults to rayon's choice.
    #[arg(long)]
    threads: Option<usize>,
}

fn execute(args: Args) -> Result<bool, Error> {
    let mut config = RunConfig::from_file(&args.config)?;
    if let Some(s) = args.seed {
        config.seed = s;
    }
    if let Some(o) = args.out {
        config.output_dir = o;
    }
    if let Some(n) = args.threads {
        if n == 0 {
            return Err(Error::Validation {
                key: "--threads".into(),
                reason: "must be at least 1".into(),
            });
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Numerical(e.to_string()))?;
    }
    let base = args.config.parent().unwrap_or(Path::new("."));
    let out = run(&config, base)?;
    let dir = if config.output_dir.is_absolute() {
        config.output_dir.clone()
    } else {
        std::env::current_dir()?.join(&config.output_dir)
    };
    for p in out.write(&dir)? {
        eprintln!("wrote {}", p.display());
    }
    println!("{}", out.record.summary());
    Ok(!out.record.payload.failed())
}

fn main() -> ExitCode {
    match execute(Args::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(3),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use lazylin::bench::{self, BenchError, Format, Mode};

/// Time naive against rewritten evaluation of the reference expressions.
#[derive(Parser, Debug)]
#[command(name = "bench", version)]
struct Args {
    /// Expression ids, comma separated, or `all`.
    #[arg(long, default_value = "all")]
    expr: String,
    /// Matrix sizes, comma separated.
    #[arg(long, default_value = "100,250,500,1000")]
    sizes: String,
    /// Timed runs per measurement.
    #[arg(long, default_value_t = 100)]
    runs: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// naive, optimised or both.
    #[arg(long, default_value = "both")]
    mode: Mode,
    /// markdown or csv.
    #[arg(long, default_value = "markdown")]
    format: Format,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn run(args: &Args) -> Result<String, BenchError> {
    let ids = bench::parse_expr_ids(&args.expr)?;
    let sizes = bench::parse_sizes(&args.sizes)?;
    let records = bench::run_bench(&ids, &sizes, args.runs, args.seed, args.mode)?;
    Ok(bench::report(&records, args.format))
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(&args) {
        Ok(text) => {
            if let Some(path) = &args.out {
                if let Err(e) = fs::write(path, text) {
                    eprintln!("bench: cannot write {}: {e}", path.display());
                    return ExitCode::FAILURE;
                }
            } else {
                print!("{text}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("bench: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

use clap::Parser;
use jacobi_cli::{run_job, verify_suite, JobError, JobSpec, Suite};
use std::io::Read;
use std::process::ExitCode;

/// Evaluation and verification jobs for Jacobi group arithmetic, theta
/// series and Schrodinger-Weil covariance. Reads a JSON job from --job or
/// stdin and writes a JSON result to stdout.
#[derive(Parser, Debug)]
#[command(name = "jacobi", version)]
struct Args {
    /// Job file (JSON); stdin is read when absent and no --suite is given.
    #[arg(long, value_name = "FILE")]
    job: Option<std::path::PathBuf>,
    /// Run a verification suite instead of a job.
    #[arg(long, value_name = "NAME", conflicts_with = "job")]
    suite: Option<String>,
    /// Seed; overrides the job's seed.
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    /// Number of random cases for --suite.
    #[arg(long, value_name = "N", default_value_t = 100)]
    count: usize,
    /// Residual tolerance; overrides the job's tol.
    #[arg(long, value_name = "X")]
    tol: Option<f64>,
}

fn execute(args: &Args) -> Result<jacobi_cli::JobResult, JobError> {
    if let Some(t) = args.tol {
        if !(t > 0.0 && t.is_finite()) {
            return Err(JobError::usage("--tol", "expected a positive number"));
        }
    }
    if let Some(name) = &args.suite {
        let suite = Suite::parse(name).ok_or_else(|| JobError::usage("--suite", format!("unknown suite {name:?}")))?;
        return verify_suite(suite, args.seed.unwrap_or(0), args.count, args.tol);
    }
    let text = match &args.job {
        Some(path) => std::fs::read_to_string(path).map_err(|e| JobError::usage("--job", e.to_string()))?,
        None => {
            let mut s = String::new();
            std::io::stdin().read_to_string(&mut s).map_err(|e| JobError::usage("stdin", e.to_string()))?;
            s
        }
    };
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| JobError::usage("$", e.to_string()))?;
    let mut spec = JobSpec::from_json(&value)?;
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    if args.tol.is_some() {
        spec.tol = args.tol;
    }
    run_job(&spec)
}

fn main() -> ExitCode {
    let args = Args::parse();
    let (json, code) = match execute(&args) {
        Ok(r) => (r.to_json(), r.exit_code()),
        Err(e) => {
            eprintln!("jacobi: {e}");
            (e.to_json(), e.exit_code())
        }
    };
    println!("{}", serde_json::to_string_pretty(&json).expect("JSON values serialize"));
    ExitCode::from(code as u8)
}

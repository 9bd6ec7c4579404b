use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use log::info;
use scg_core::verify::{Verdict, VerdictStatus};
use scg_core::{MatroidRegistry, ObjectiveKind, SetObjective};

use crate::config::ExperimentConfig;
use crate::data::{load_ratings, write_triplets, RatingsFormat, SyntheticSpec};
use crate::error::{BenchError, Result};
use crate::experiment::{run_experiment_with, write_atomic, write_verdict_file};
use crate::suite::verify_config;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_VERIFY: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "scg-bench", version, about = "Stochastic continuous greedy experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run every (algorithm, k, seed) cell and write summary and trace CSVs.
    Run { config: PathBuf },
    /// Run the verification suite only and write verdicts.csv.
    Verify { config: PathBuf },
    /// Write a synthetic rating file, e.g. `synthetic:200x100:0.1:5:7`.
    GenData { spec: String, out: PathBuf },
    /// Print size, density, m_f and the sigma bound of a rating file.
    Inspect {
        ratings: PathBuf,
        #[arg(long, default_value = "facility-location")]
        objective: String,
        /// `tsv` or `movielens`; guessed from the extension when omitted.
        #[arg(long)]
        format: Option<String>,
    },
}

/// Entry point shared by the binary and the tests. Returns the process exit code.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_CONFIG
        }
    }
}

fn dispatch(command: Command) -> Result<i32> {
    let registry = MatroidRegistry::default();
    match command {
        Command::Run { config } => {
            let cfg = ExperimentConfig::load(&config)?;
            let report = run_experiment_with(&cfg, &registry)?;
            let failed = report.results.iter().filter(|r| !r.ok()).count();
            println!(
                "{} cells ({} failed); summary at {}",
                report.results.len(),
                failed,
                report.summary_path.display()
            );
            if let Some(verdicts) = &report.verdicts {
                print_verdicts(verdicts);
            }
            Ok(if report.verification_failed() { EXIT_VERIFY } else { EXIT_OK })
        }
        Command::Verify { config } => {
            let cfg = ExperimentConfig::load(&config)?;
            let verdicts = verify_config(&cfg, &registry)?;
            let path = write_verdict_file(&cfg.outputs, &verdicts)?;
            print_verdicts(&verdicts);
            info!("verdicts written to {}", path.display());
            Ok(if verdicts.iter().any(Verdict::failed) { EXIT_VERIFY } else { EXIT_OK })
        }
        Command::GenData { spec, out } => {
            let spec: SyntheticSpec = spec.parse()?;
            let m = spec.generate()?;
            let mut buf = Vec::new();
            write_triplets(&m, &mut buf).map_err(|e| BenchError::io(&out, e))?;
            if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir).map_err(|e| BenchError::io(dir, e))?;
            }
            write_atomic(&out, &buf)?;
            println!("wrote {} ratings to {}", m.nnz(), out.display());
            Ok(EXIT_OK)
        }
        Command::Inspect {
            ratings,
            objective,
            format,
        } => {
            print!("{}", inspect(&ratings, &objective, format.as_deref())?);
            Ok(EXIT_OK)
        }
    }
}

pub fn inspect(path: &Path, objective: &str, format: Option<&str>) -> Result<String> {
    let format = match format {
        None => RatingsFormat::guess(path),
        Some("tsv") => RatingsFormat::TripletTsv,
        Some("movielens") => RatingsFormat::MovielensDat,
        Some(other) => return Err(BenchError::Invalid(format!("unknown ratings format {other:?}"))),
    };
    let kind: ObjectiveKind = objective.parse()?;
    let m = load_ratings(path, format)?;
    let (users, items, nnz, density) = (m.num_users(), m.num_items(), m.nnz(), m.density());
    let f = SetObjective::from_ratings(kind, m)?;
    Ok(format!(
        "objective: {}\nN: {users}\nn: {items}\nratings: {nnz}\ndensity: {density}\nm_f: {}\nsigma_bound: {}\n",
        kind.name(),
        f.max_singleton()?,
        f.sigma_upper_bound()?
    ))
}

fn print_verdicts(verdicts: &[Verdict]) {
    for v in verdicts {
        let tag = match v.status {
            VerdictStatus::Pass => "PASS",
            VerdictStatus::Fail => "FAIL",
            VerdictStatus::Skip => "SKIP",
        };
        if v.status == VerdictStatus::Skip {
            println!("[{tag}] {} ({})", v.name, v.threshold);
        } else {
            println!("[{tag}] {} = {} ({})", v.name, v.metric, v.threshold);
        }
    }
}

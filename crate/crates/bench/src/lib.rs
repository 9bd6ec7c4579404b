//! Experiment harness around `scg-core`: rating ingestion, a small config
//! format, seeded grids over algorithms, budgets and seeds, and CSV output.

pub mod cli;
pub mod config;
pub mod data;
pub mod error;
pub mod experiment;
pub mod suite;

pub use cli::cli_main;
pub use config::{AlgorithmSpec, DataSource, ExperimentConfig, Method};
pub use data::{gen_synthetic, load_ratings, parse_ratings, RatingsFormat, SyntheticSpec};
pub use error::{BenchError, Result};
pub use experiment::{run_experiment, run_experiment_with, CellResult, ExperimentReport, SUMMARY_CSV_HEADER};

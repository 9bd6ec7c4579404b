//! Seeded execution of (algorithm × k × seed) grids and CSV emission.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use log::{info, warn};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use scg_core::verify::{write_verdicts, Verdict};
use scg_core::{
    independent_round, pipage_round, run_batch_greedy, run_fw, run_scg, run_sga, Constraint,
    ContinuousPoint, Error as CoreError, MatroidRegistry, ObjectiveKind, ScgConfig, SetObjective,
    Trace, TraceOptions, MAX_EXACT_N,
};

use crate::config::{AlgorithmSpec, DataSource, ExperimentConfig, Method};
use crate::data::{load_ratings, RatingsFormat};
use crate::error::{BenchError, Result};
use crate::suite;

pub const SUMMARY_CSV_HEADER: &str =
    "algorithm,k,B,seed,final_value,rounded_value,total_evals,wall_ms,status";

/// Points on the value curve kept in each trace.
const VALUE_POINTS: usize = 50;
/// Samples for the Monte Carlo value of a fractional point when no exact form exists.
const VALUE_SAMPLES: usize = 1000;
const ROUNDING_STREAM: u64 = 0x5eed_0001;
const VALUE_STREAM: u64 = 0x5eed_0002;

/// Objective and base constraint shared by every cell.
pub struct Instance {
    pub objective: SetObjective,
    pub constraint: Constraint,
}

impl Instance {
    pub fn from_config(cfg: &ExperimentConfig, registry: &MatroidRegistry) -> Result<Self> {
        let objective = load_objective(cfg)?;
        let constraint = Constraint::parse(&cfg.constraint, objective.n(), registry)?;
        Ok(Self {
            objective,
            constraint,
        })
    }

    /// The constraint for budget `k` (sweeps re-parameterize a cardinality constraint).
    pub fn constraint_for(&self, k: usize) -> Result<Constraint> {
        if self.constraint.cardinality_k() == Some(k) || self.constraint.cardinality_k().is_none() {
            return Ok(self.constraint.clone());
        }
        Ok(self.constraint.with_cardinality(k)?)
    }
}

pub fn load_objective(cfg: &ExperimentConfig) -> Result<SetObjective> {
    let ratings = match (&cfg.data, cfg.objective) {
        (DataSource::Table(path), ObjectiveKind::ExplicitTable) => {
            let text = fs::read_to_string(path).map_err(|e| BenchError::io(path, e))?;
            return Ok(SetObjective::parse_explicit_table(&text)?);
        }
        (DataSource::Table(_), _) | (_, ObjectiveKind::ExplicitTable) => {
            return Err(BenchError::Invalid(
                "the explicit-table objective goes with `data = table:PATH` and nothing else".into(),
            ))
        }
        (DataSource::Synthetic(spec), _) => spec.generate()?,
        (DataSource::Triplets(path), _) => load_ratings(path, RatingsFormat::TripletTsv)?,
        (DataSource::Movielens(path), _) => load_ratings(path, RatingsFormat::MovielensDat)?,
    };
    Ok(SetObjective::from_ratings(cfg.objective, ratings)?)
}

/// Budgets to sweep: `k_sweep` when given, otherwise the constraint rank.
pub fn k_values(cfg: &ExperimentConfig, inst: &Instance) -> Result<Vec<usize>> {
    match &cfg.k_sweep {
        None => Ok(vec![inst.constraint.rank()]),
        Some(ks) => {
            if inst.constraint.cardinality_k().is_none() {
                return Err(BenchError::Invalid(format!(
                    "k_sweep needs a cardinality constraint, got {}",
                    inst.constraint
                )));
            }
            let n = inst.objective.n();
            if let Some(k) = ks.iter().find(|&&k| k > n) {
                return Err(BenchError::Invalid(format!("k = {k} exceeds n = {n}")));
            }
            Ok(ks.clone())
        }
    }
}

/// Generator seed of every cell run with `seed`. Cells that share a seed share
/// their streams, which pairs algorithms and keeps greedy runs nested across k.
pub fn cell_seed(master: u64, seed: u64) -> u64 {
    splitmix64(master ^ splitmix64(seed))
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Debug, Clone)]
pub struct Cell {
    pub algorithm: AlgorithmSpec,
    pub k: usize,
    pub seed: u64,
}

impl Cell {
    pub fn trace_file_name(&self) -> String {
        format!("{}_k{}_s{}.csv", self.algorithm.label, self.k, self.seed)
    }
}

#[derive(Debug, Clone)]
pub struct CellResult {
    pub cell: Cell,
    pub final_value: Option<f64>,
    pub rounded_value: Option<f64>,
    pub rounded_set: Option<Vec<usize>>,
    pub total_evals: Option<u64>,
    pub wall_ms: u128,
    /// `ok`, or the error that stopped the cell.
    pub status: String,
    pub point: Option<ContinuousPoint>,
    pub trace: Option<Trace>,
}

impl CellResult {
    pub fn ok(&self) -> bool {
        self.status == "ok"
    }

    pub fn write_summary_row(&self, out: &mut String) {
        let opt = |v: Option<f64>| v.map_or_else(String::new, |v| v.to_string());
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            self.cell.algorithm.label,
            self.cell.k,
            self.cell.algorithm.batch,
            self.cell.seed,
            opt(self.final_value),
            opt(self.rounded_value),
            self.total_evals.map_or_else(String::new, |v| v.to_string()),
            self.wall_ms,
            csv_safe(&self.status)
        );
    }
}

fn csv_safe(s: &str) -> String {
    s.chars()
        .map(|c| match c {
            ',' => ';',
            '\n' | '\r' | '"' => ' ',
            c => c,
        })
        .collect()
}

pub fn summary_csv(results: &[CellResult]) -> String {
    let mut out = String::from(SUMMARY_CSV_HEADER);
    out.push('\n');
    for r in results {
        r.write_summary_row(&mut out);
    }
    out
}

pub fn cells(cfg: &ExperimentConfig, ks: &[usize]) -> Vec<Cell> {
    let mut out = Vec::new();
    for algorithm in &cfg.algorithms {
        for &k in ks {
            for &seed in &cfg.seeds {
                out.push(Cell {
                    algorithm: algorithm.clone(),
                    k,
                    seed,
                });
            }
        }
    }
    out
}

pub fn run_cell(inst: &Instance, cell: &Cell, master_seed: u64, exact_diagnostics: bool) -> CellResult {
    let start = Instant::now();
    let mut result = CellResult {
        cell: cell.clone(),
        final_value: None,
        rounded_value: None,
        rounded_set: None,
        total_evals: None,
        wall_ms: 0,
        status: "ok".into(),
        point: None,
        trace: None,
    };
    if let Err(e) = fill_cell(inst, cell, master_seed, exact_diagnostics, &mut result) {
        warn!("cell {} k={} seed={} failed: {e}", cell.algorithm.label, cell.k, cell.seed);
        result.status = format!("error: {e}");
    }
    result.wall_ms = start.elapsed().as_millis();
    result
}

fn fill_cell(
    inst: &Instance,
    cell: &Cell,
    master_seed: u64,
    exact_diagnostics: bool,
    result: &mut CellResult,
) -> std::result::Result<(), CoreError> {
    let f = &inst.objective;
    let c = inst.constraint_for(cell.k).map_err(|e| CoreError::InvalidArgument(e.to_string()))?;
    let spec = &cell.algorithm;
    let seed = cell_seed(master_seed, cell.seed);
    let trace_opts = TraceOptions {
        exact_diagnostics: exact_diagnostics && f.n() <= MAX_EXACT_N,
        keep_states: false,
        value_every: (spec.horizon / VALUE_POINTS).max(1),
    };

    if spec.method == Method::Greedy {
        let k = c.cardinality_k().ok_or_else(|| {
            CoreError::Capability(format!("greedy needs a cardinality constraint, got {c}"))
        })?;
        let (set, trace) = run_batch_greedy(f, k, spec.batch, seed, &trace_opts)?;
        let value = f.expected_value(&set)?;
        result.final_value = Some(value);
        result.rounded_value = Some(value);
        result.total_evals = Some(trace.total_evals());
        result.rounded_set = Some(set);
        result.trace = Some(trace);
        return Ok(());
    }

    let cfg = ScgConfig::new(spec.horizon, spec.batch, seed)
        .with_schedule(spec.schedule)
        .with_trace(trace_opts);
    let (x, trace) = match spec.method {
        Method::Scg => run_scg(f, &c, &cfg)?,
        Method::Fw => run_fw(f, &c, &cfg)?,
        Method::Sga => run_sga(f, &c, &cfg, spec.step)?,
        Method::Greedy => unreachable!("handled above"),
    };
    result.total_evals = Some(trace.total_evals());
    result.final_value = Some(match f.multilinear_value(&x) {
        Ok(v) => v,
        Err(CoreError::Capability(_)) => monte_carlo_value(f, &x, seed)?,
        Err(e) => return Err(e),
    });
    result.trace = Some(trace);
    result.point = Some(x.clone());

    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ ROUNDING_STREAM);
    let rounded = pipage_round(&x, &c, &mut rng)?.evaluate(f)?;
    result.rounded_value = rounded.value;
    result.rounded_set = Some(rounded.set);
    Ok(())
}

fn monte_carlo_value(f: &SetObjective, x: &ContinuousPoint, seed: u64) -> std::result::Result<f64, CoreError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ VALUE_STREAM);
    let mut total = 0.0;
    for _ in 0..VALUE_SAMPLES {
        total += f.expected_value(&independent_round(x, &mut rng))?;
    }
    Ok(total / VALUE_SAMPLES as f64)
}

/// Runs every cell, in parallel when `workers > 1`. Results keep cell order.
pub fn execute(cfg: &ExperimentConfig, inst: &Instance, exact_diagnostics: bool) -> Result<Vec<CellResult>> {
    let ks = k_values(cfg, inst)?;
    let grid = cells(cfg, &ks);
    info!("running {} cells on {} worker(s)", grid.len(), cfg.workers);
    let run = |cell: &Cell| run_cell(inst, cell, cfg.master_seed, exact_diagnostics);
    if cfg.workers == 1 {
        return Ok(grid.iter().map(run).collect());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| BenchError::Invalid(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(|| grid.par_iter().map(run).collect()))
}

pub struct ExperimentReport {
    pub results: Vec<CellResult>,
    pub verdicts: Option<Vec<Verdict>>,
    pub summary_path: PathBuf,
}

impl ExperimentReport {
    pub fn verification_failed(&self) -> bool {
        self.verdicts.as_ref().is_some_and(|v| v.iter().any(Verdict::failed))
    }
}

/// Runs the grid and writes `summary.csv`, one trace per cell under
/// `traces/`, and `verdicts.csv` when exact diagnostics are on.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    run_experiment_with(cfg, &MatroidRegistry::default())
}

pub fn run_experiment_with(cfg: &ExperimentConfig, registry: &MatroidRegistry) -> Result<ExperimentReport> {
    let inst = Instance::from_config(cfg, registry)?;
    let results = execute(cfg, &inst, cfg.exact_diagnostics)?;
    let traces = cfg.outputs.join("traces");
    fs::create_dir_all(&traces).map_err(|e| BenchError::io(&traces, e))?;
    for r in &results {
        if let Some(trace) = &r.trace {
            let mut buf = Vec::new();
            trace.write_csv(&mut buf, false).map_err(|e| BenchError::io(&traces, e))?;
            write_atomic(&traces.join(r.cell.trace_file_name()), &buf)?;
        }
    }
    let summary_path = cfg.outputs.join("summary.csv");
    write_atomic(&summary_path, summary_csv(&results).as_bytes())?;
    let verdicts = if cfg.exact_diagnostics {
        let verdicts = suite::verdicts(cfg, &inst, &results)?;
        write_verdict_file(&cfg.outputs, &verdicts)?;
        Some(verdicts)
    } else {
        None
    };
    Ok(ExperimentReport {
        results,
        verdicts,
        summary_path,
    })
}

pub fn write_verdict_file(dir: &Path, verdicts: &[Verdict]) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| BenchError::io(dir, e))?;
    let path = dir.join("verdicts.csv");
    let mut buf = Vec::new();
    write_verdicts(&mut buf, verdicts).map_err(|e| BenchError::io(&path, e))?;
    write_atomic(&path, &buf)?;
    Ok(path)
}

/// Writes through a sibling temporary file and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let name = path
        .file_name()
        .ok_or_else(|| BenchError::Invalid(format!("{} is not a file path", path.display())))?;
    let tmp = path.with_file_name(format!(".{}.tmp", name.to_string_lossy()));
    let write = || -> io::Result<()> {
        let mut file = fs::File::create(&tmp)?;
        file.write_all(bytes)?;
        file.sync_all()?;
        fs::rename(&tmp, path)
    };
    write().map_err(|e| BenchError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ExperimentConfig;

    fn config(extra: &str, algos: &str) -> ExperimentConfig {
        let text = format!(
            "data = synthetic:40x12:0.3:5:1\nconstraint = cardinality:3\nseeds = 0,1\noutputs = out\n{extra}\n{algos}"
        );
        ExperimentConfig::parse(&text, Path::new("/nonexistent")).unwrap()
    }

    const ALL: &str = "[algorithm]\nname = scg\nT = 20\n[algorithm]\nname = sga\nT = 20\nB = 2\n[algorithm]\nname = fw\nT = 20\n[algorithm]\nname = greedy\nB = 3\n";

    #[test]
    fn cell_seeds_are_distinct_and_stable() {
        assert_eq!(cell_seed(0, 5), cell_seed(0, 5));
        assert_ne!(cell_seed(0, 5), cell_seed(0, 6));
        assert_ne!(cell_seed(1, 5), cell_seed(0, 5));
    }

    #[test]
    fn grid_runs_and_counts_evaluations() {
        let cfg = config("k_sweep = 1,3", ALL);
        let inst = Instance::from_config(&cfg, &MatroidRegistry::default()).unwrap();
        let results = execute(&cfg, &inst, false).unwrap();
        assert_eq!(results.len(), 4 * 2 * 2);
        let n = 12u64;
        for r in &results {
            assert!(r.ok(), "{}", r.status);
            let a = &r.cell.algorithm;
            let expected = match a.method {
                Method::Greedy => n * r.cell.k as u64 * a.batch as u64,
                _ => n * a.batch as u64 * a.horizon as u64,
            };
            assert_eq!(r.total_evals, Some(expected));
            let set = r.rounded_set.as_ref().unwrap();
            assert!(set.len() <= r.cell.k);
        }
    }

    #[test]
    fn parallel_and_sequential_agree() {
        let seq = config("", ALL);
        let par = config("workers = 3", ALL);
        let inst = Instance::from_config(&seq, &MatroidRegistry::default()).unwrap();
        let a = execute(&seq, &inst, false).unwrap();
        let b = execute(&par, &inst, false).unwrap();
        let strip = |rs: &[CellResult]| {
            rs.iter()
                .map(|r| (r.final_value, r.rounded_value, r.rounded_set.clone(), r.total_evals))
                .collect::<Vec<_>>()
        };
        assert_eq!(strip(&a), strip(&b));
    }

    #[test]
    fn failing_cells_are_isolated() {
        let cfg = ExperimentConfig::parse(
            "data = synthetic:20x8:0.4:5:1\nconstraint = partition:0,0,0,0,1,1,1,1|1,2\nseeds = 0\noutputs = o\n\
             [algorithm]\nname = greedy\n[algorithm]\nname = scg\nT = 10\n",
            Path::new("."),
        )
        .unwrap();
        let inst = Instance::from_config(&cfg, &MatroidRegistry::default()).unwrap();
        let results = execute(&cfg, &inst, false).unwrap();
        assert!(results[0].status.starts_with("error:"));
        assert!(results[1].ok());
        let csv = summary_csv(&results);
        assert_eq!(csv.lines().count(), 3);
        assert!(csv.lines().nth(1).unwrap().starts_with("greedy,3,1,0,,,,"));
    }

    #[test]
    fn greedy_values_grow_with_k() {
        let cfg = config("k_sweep = 1..6", "[algorithm]\nname = greedy\nB = 4\n");
        let inst = Instance::from_config(&cfg, &MatroidRegistry::default()).unwrap();
        let results = execute(&cfg, &inst, false).unwrap();
        for seed in [0, 1] {
            let vals: Vec<f64> = results
                .iter()
                .filter(|r| r.cell.seed == seed)
                .map(|r| r.rounded_value.unwrap())
                .collect();
            assert_eq!(vals.len(), 5);
            assert!(vals.windows(2).all(|w| w[0] <= w[1]), "{vals:?}");
        }
    }

    #[test]
    fn sweep_rejects_k_above_n() {
        let cfg = config("k_sweep = 13", ALL);
        let inst = Instance::from_config(&cfg, &MatroidRegistry::default()).unwrap();
        assert!(k_values(&cfg, &inst).is_err());
    }

    #[test]
    fn csv_fields_stay_single_column() {
        assert_eq!(csv_safe("error: a, b\nc"), "error: a; b c");
    }
}

//! Experiment configuration: `key = value` lines, one `[algorithm]` block per method.
//!
//! ```text
//! objective = facility-location
//! data = synthetic:200x100:0.1:5:7
//! constraint = cardinality:20
//! k_sweep = 5, 10, 20
//! seeds = 0..10
//! outputs = out
//!
//! [algorithm]
//! name = scg
//! T = 500
//! B = 1
//! ```

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use scg_core::{ObjectiveKind, RhoSchedule};

use crate::data::SyntheticSpec;
use crate::error::{BenchError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Scg,
    Sga,
    Fw,
    Greedy,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Self::Scg => "scg",
            Self::Sga => "sga",
            Self::Fw => "fw",
            Self::Greedy => "greedy",
        }
    }

    pub fn is_continuous(self) -> bool {
        self != Self::Greedy
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "scg" => Ok(Self::Scg),
            "sga" => Ok(Self::Sga),
            "fw" => Ok(Self::Fw),
            "greedy" => Ok(Self::Greedy),
            other => Err(format!("unknown algorithm {other:?} (expected scg, sga, fw or greedy)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlgorithmSpec {
    /// Name written to the summary; defaults to the method name.
    pub label: String,
    pub method: Method,
    /// Iterations. Ignored by greedy, which runs `k` rounds.
    pub horizon: usize,
    pub batch: usize,
    /// SGA step constant.
    pub step: f64,
    pub schedule: RhoSchedule,
}

#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    Synthetic(SyntheticSpec),
    Triplets(PathBuf),
    Movielens(PathBuf),
    Table(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub objective: ObjectiveKind,
    pub data: DataSource,
    pub constraint: String,
    pub algorithms: Vec<AlgorithmSpec>,
    pub k_sweep: Option<Vec<usize>>,
    pub seeds: Vec<u64>,
    pub outputs: PathBuf,
    pub exact_diagnostics: bool,
    pub workers: usize,
    pub master_seed: u64,
}

impl ExperimentConfig {
    /// Reads a config file; relative paths inside it resolve against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| BenchError::io(path, e))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Self::parse(&text, base)
    }

    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let mut top = Builder::default();
        let mut algos: Vec<(usize, AlgoBuilder)> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let err = |message: String| BenchError::Config {
                line: line_no,
                message,
            };
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if line.starts_with('[') {
                if line != "[algorithm]" {
                    return Err(err(format!("unknown section {line}")));
                }
                algos.push((line_no, AlgoBuilder::default()));
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected `key = value`, got {line:?}")))?;
            let (key, value) = (key.trim(), value.trim());
            if value.is_empty() {
                return Err(err(format!("empty value for {key}")));
            }
            match algos.last_mut() {
                Some((_, a)) => a.set(key, value).map_err(err)?,
                None => top.set(key, value, base).map_err(err)?,
            }
        }
        let algorithms = algos
            .into_iter()
            .map(|(line, a)| a.finish().map_err(|message| BenchError::Config { line, message }))
            .collect::<Result<Vec<_>>>()?;
        top.finish(algorithms)
    }
}

fn parse_num<T: FromStr>(key: &str, value: &str) -> std::result::Result<T, String> {
    value
        .parse()
        .map_err(|_| format!("{key}: cannot parse {value:?}"))
}

fn parse_bool(key: &str, value: &str) -> std::result::Result<bool, String> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(format!("{key}: expected true or false, got {value:?}")),
    }
}

/// Comma separated values, where `a..b` expands to the half-open range.
fn parse_list<T>(key: &str, value: &str) -> std::result::Result<Vec<T>, String>
where
    T: FromStr + TryFrom<u64>,
{
    let mut out = Vec::new();
    for part in value.split(',').map(str::trim) {
        if let Some((lo, hi)) = part.split_once("..") {
            let lo: u64 = parse_num(key, lo.trim())?;
            let hi: u64 = parse_num(key, hi.trim())?;
            if lo >= hi {
                return Err(format!("{key}: empty range {part}"));
            }
            for v in lo..hi {
                out.push(T::try_from(v).map_err(|_| format!("{key}: {v} out of range"))?);
            }
        } else {
            out.push(parse_num(key, part)?);
        }
    }
    Ok(out)
}

#[derive(Default)]
struct Builder {
    objective: Option<ObjectiveKind>,
    data: Option<DataSource>,
    constraint: Option<String>,
    k_sweep: Option<Vec<usize>>,
    seeds: Option<Vec<u64>>,
    outputs: Option<PathBuf>,
    exact_diagnostics: bool,
    workers: Option<usize>,
    master_seed: u64,
}

impl Builder {
    fn set(&mut self, key: &str, value: &str, base: &Path) -> std::result::Result<(), String> {
        match key {
            "objective" => self.objective = Some(value.parse().map_err(|e| format!("{e}"))?),
            "data" => self.data = Some(parse_data(value, base)?),
            "constraint" => self.constraint = Some(value.to_string()),
            "k_sweep" => self.k_sweep = Some(parse_list(key, value)?),
            "seeds" => self.seeds = Some(parse_list(key, value)?),
            "outputs" => self.outputs = Some(base.join(value)),
            "exact_diagnostics" => self.exact_diagnostics = parse_bool(key, value)?,
            "workers" => self.workers = Some(parse_num(key, value)?),
            "master_seed" => self.master_seed = parse_num(key, value)?,
            _ => return Err(format!("unknown key {key:?}")),
        }
        Ok(())
    }

    fn finish(self, algorithms: Vec<AlgorithmSpec>) -> Result<ExperimentConfig> {
        let missing = |what: &str| BenchError::Invalid(format!("config is missing `{what}`"));
        let seeds = self.seeds.ok_or_else(|| missing("seeds"))?;
        if seeds.is_empty() {
            return Err(BenchError::Invalid("seeds must not be empty".into()));
        }
        if algorithms.is_empty() {
            return Err(BenchError::Invalid("config has no [algorithm] block".into()));
        }
        if let Some(ks) = &self.k_sweep {
            if ks.is_empty() || ks.contains(&0) {
                return Err(BenchError::Invalid("k_sweep values must be positive".into()));
            }
        }
        let workers = self.workers.unwrap_or(1);
        if workers == 0 {
            return Err(BenchError::Invalid("workers must be at least 1".into()));
        }
        let mut labels: Vec<&str> = algorithms.iter().map(|a| a.label.as_str()).collect();
        labels.sort_unstable();
        if labels.windows(2).any(|w| w[0] == w[1]) {
            return Err(BenchError::Invalid(
                "algorithm labels must be unique; set `label` to tell repeated methods apart".into(),
            ));
        }
        Ok(ExperimentConfig {
            objective: self.objective.unwrap_or(ObjectiveKind::FacilityLocation),
            data: self.data.ok_or_else(|| missing("data"))?,
            constraint: self.constraint.ok_or_else(|| missing("constraint"))?,
            algorithms,
            k_sweep: self.k_sweep,
            seeds,
            outputs: self.outputs.ok_or_else(|| missing("outputs"))?,
            exact_diagnostics: self.exact_diagnostics,
            workers,
            master_seed: self.master_seed,
        })
    }
}

fn parse_data(value: &str, base: &Path) -> std::result::Result<DataSource, String> {
    if value.starts_with("synthetic:") {
        return value.parse().map(DataSource::Synthetic).map_err(|e| format!("{e}"));
    }
    let (kind, path) = value
        .split_once(':')
        .ok_or_else(|| format!("data {value:?} must be synthetic:..., tsv:PATH, movielens:PATH or table:PATH"))?;
    let path = base.join(path.trim());
    match kind {
        "tsv" => Ok(DataSource::Triplets(path)),
        "movielens" => Ok(DataSource::Movielens(path)),
        "table" => Ok(DataSource::Table(path)),
        _ => Err(format!("unknown data kind {kind:?}")),
    }
}

#[derive(Default)]
struct AlgoBuilder {
    label: Option<String>,
    method: Option<Method>,
    horizon: Option<usize>,
    batch: Option<usize>,
    step: Option<f64>,
    schedule: Option<RhoSchedule>,
}

impl AlgoBuilder {
    fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        match key {
            "name" => self.method = Some(value.parse()?),
            "label" => {
                if value.contains(',') || value.contains(char::is_whitespace) {
                    return Err(format!("label {value:?} must not contain commas or spaces"));
                }
                self.label = Some(value.to_string());
            }
            "T" => self.horizon = Some(parse_num(key, value)?),
            "B" => self.batch = Some(parse_num(key, value)?),
            "c" => self.step = Some(parse_num(key, value)?),
            "schedule" => self.schedule = Some(value.parse().map_err(|e| format!("{e}"))?),
            _ => return Err(format!("unknown algorithm key {key:?}")),
        }
        Ok(())
    }

    fn finish(self) -> std::result::Result<AlgorithmSpec, String> {
        let method = self.method.ok_or("[algorithm] block needs a name")?;
        let horizon = match (method, self.horizon) {
            (Method::Greedy, t) => t.unwrap_or(0),
            (_, Some(t)) if t >= 1 => t,
            (_, Some(_)) => return Err("T must be at least 1".into()),
            (_, None) => return Err(format!("{} needs T", method.name())),
        };
        let batch = self.batch.unwrap_or(1);
        if batch == 0 {
            return Err("B must be at least 1".into());
        }
        let step = self.step.unwrap_or(1.0);
        if !step.is_finite() || step < 0.0 {
            return Err("c must be finite and nonnegative".into());
        }
        Ok(AlgorithmSpec {
            label: self.label.unwrap_or_else(|| method.name().to_string()),
            method,
            horizon,
            batch,
            step,
            schedule: self.schedule.unwrap_or_default(),
        })
    }
}

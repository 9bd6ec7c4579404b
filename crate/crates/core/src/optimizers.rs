//! Stochastic continuous greedy and the baselines it is compared against.
//!
//! All continuous methods start at `x_0 = 0`, run exactly `T` iterations and
//! record `T + 1` trace states. SCG and FW take steps of length `1/T` towards
//! an extreme point, so `x_T = (1/T) Σ_t v_t`; the iterate is kept as integer
//! visit counts divided by `T`, which keeps the sum exact.

use std::io::{self, Write};

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::constraints::{Constraint, ExtremePoint};
use crate::error::{Error, Result};
use crate::submodular::{check_dim, ContinuousPoint, GradientVector, MultilinearOracle, SetObjective};

/// Averaging weights `ρ_t` for the gradient recursion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RhoSchedule {
    /// `4 / (t + 8)^{2/3}`, the schedule the convergence guarantee is stated for.
    #[default]
    Lemma2,
    /// `t^{-2/3} / 2`, the schedule used for the MovieLens experiments.
    Experiments,
}

impl RhoSchedule {
    pub fn rho(self, t: usize) -> Result<f64> {
        if t == 0 {
            return Err(Error::arg("averaging schedule is indexed from t = 1"));
        }
        let t = t as f64;
        Ok(match self {
            RhoSchedule::Lemma2 => 4.0 / (t + 8.0).powf(2.0 / 3.0),
            RhoSchedule::Experiments => 0.5 * t.powf(-2.0 / 3.0),
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            RhoSchedule::Lemma2 => "lemma2",
            RhoSchedule::Experiments => "experiments",
        }
    }
}

impl std::str::FromStr for RhoSchedule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lemma2" => Ok(RhoSchedule::Lemma2),
            "experiments" => Ok(RhoSchedule::Experiments),
            other => Err(Error::arg(format!("unknown averaging schedule {other:?}"))),
        }
    }
}

/// `ρ_t = 4 / (t + 8)^{2/3}`.
pub fn rho_schedule(t: usize) -> Result<f64> {
    RhoSchedule::Lemma2.rho(t)
}

/// Where per-iteration gradients come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GradientSource {
    /// Mini-batch average of the unbiased set-sampling estimator.
    #[default]
    Stochastic,
    /// Exact `∇F` by enumeration (`n <= 20`). No evaluations are charged.
    Exact,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TraceOptions {
    /// Record `F(x_t)` and the squared gradient error at every iteration
    /// using the exact oracle (`n <= 20`).
    pub exact_diagnostics: bool,
    /// Keep `x_t`, `d_t` and `v_t` in every record.
    pub keep_states: bool,
    /// Record `F(x_t)` every this many iterations where a cheap exact value
    /// exists (see [`SetObjective::multilinear_value`]). Zero disables.
    pub value_every: usize,
}

/// Run parameters shared by SCG, FW and SGA.
#[derive(Debug, Clone, PartialEq)]
pub struct ScgConfig {
    pub horizon: usize,
    pub batch: usize,
    pub schedule: RhoSchedule,
    pub seed: u64,
    pub gradient: GradientSource,
    pub trace: TraceOptions,
}

impl ScgConfig {
    pub fn new(horizon: usize, batch: usize, seed: u64) -> Self {
        Self {
            horizon,
            batch,
            schedule: RhoSchedule::default(),
            seed,
            gradient: GradientSource::default(),
            trace: TraceOptions::default(),
        }
    }

    pub fn with_schedule(mut self, schedule: RhoSchedule) -> Self {
        self.schedule = schedule;
        self
    }

    pub fn with_gradient(mut self, gradient: GradientSource) -> Self {
        self.gradient = gradient;
        self
    }

    pub fn with_trace(mut self, trace: TraceOptions) -> Self {
        self.trace = trace;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::arg("horizon T must be at least 1"));
        }
        if self.batch == 0 {
            return Err(Error::arg("mini-batch size B must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterateState {
    pub x: ContinuousPoint,
    /// The direction handed to the linear oracle (or the ascent step for SGA).
    pub d: GradientVector,
    pub v: Option<ExtremePoint>,
}

/// One trace row. Record `t` holds the iterate after `t` updates; `grad_err`
/// is `‖∇F(q) − d_t‖²` where `q` is the point the gradient of step `t` was
/// sampled at (the previous iterate).
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub t: usize,
    pub rho: Option<f64>,
    pub value_est: Option<f64>,
    pub grad_err: Option<f64>,
    /// Cumulative scenario-function evaluations.
    pub evals: u64,
    pub x_sparsity: usize,
    pub state: Option<IterateState>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trace {
    pub records: Vec<TraceRecord>,
}

pub const TRACE_CSV_HEADER: &str = "t,rho,value_est,grad_err,evals,x_sparsity";

impl Trace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn total_evals(&self) -> u64 {
        self.records.last().map_or(0, |r| r.evals)
    }

    /// `(t, grad_err)` for every record that has one.
    pub fn grad_errors(&self) -> Vec<(usize, f64)> {
        self.records
            .iter()
            .filter_map(|r| r.grad_err.map(|e| (r.t, e)))
            .collect()
    }

    /// Writes the trace as CSV. With `dump_x`, a trailing `x` column holds the
    /// `;`-separated iterate (only for records that kept their state).
    pub fn write_csv<W: Write>(&self, mut out: W, dump_x: bool) -> io::Result<()> {
        let opt = |v: Option<f64>| v.map_or_else(String::new, |v| v.to_string());
        write!(out, "{TRACE_CSV_HEADER}")?;
        if dump_x {
            write!(out, ",x")?;
        }
        writeln!(out)?;
        for r in &self.records {
            write!(
                out,
                "{},{},{},{},{},{}",
                r.t,
                opt(r.rho),
                opt(r.value_est),
                opt(r.grad_err),
                r.evals,
                r.x_sparsity
            )?;
            if dump_x {
                let xs = r.state.as_ref().map_or_else(String::new, |s| {
                    s.x.as_slice().iter().map(f64::to_string).collect::<Vec<_>>().join(";")
                });
                write!(out, ",{xs}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// Bookkeeping shared by the continuous methods.
struct Recorder<'a> {
    f: &'a SetObjective,
    opts: &'a TraceOptions,
    oracle: Option<MultilinearOracle>,
    evals: u64,
    trace: Trace,
}

impl<'a> Recorder<'a> {
    fn new(f: &'a SetObjective, opts: &'a TraceOptions, need_oracle: bool) -> Result<Self> {
        let oracle = if need_oracle || opts.exact_diagnostics {
            Some(MultilinearOracle::new(f)?)
        } else {
            None
        };
        Ok(Self {
            f,
            opts,
            oracle,
            evals: 0,
            trace: Trace::default(),
        })
    }

    fn exact_gradient(&self, x: &ContinuousPoint) -> Option<Result<GradientVector>> {
        self.oracle.as_ref().map(|o| o.gradient(x))
    }

    fn gradient<R: Rng>(
        &mut self,
        source: GradientSource,
        x: &ContinuousPoint,
        batch: usize,
        rng: &mut R,
    ) -> Result<GradientVector> {
        match source {
            GradientSource::Exact => self.exact_gradient(x).expect("oracle built for exact mode"),
            GradientSource::Stochastic => {
                let g = self.f.stochastic_gradient(x, batch, rng)?;
                self.evals += (self.f.n() * batch) as u64;
                Ok(g)
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn record(
        &mut self,
        t: usize,
        horizon: usize,
        rho: Option<f64>,
        grad_err: Option<f64>,
        x: &ContinuousPoint,
        d: &GradientVector,
        v: Option<&ExtremePoint>,
    ) -> Result<()> {
        let value_est = if let Some(o) = &self.oracle {
            Some(o.value(x)?)
        } else if self.opts.value_every > 0 && (t.is_multiple_of(self.opts.value_every) || t == horizon) {
            match self.f.multilinear_value(x) {
                Ok(v) => Some(v),
                Err(Error::Capability(_)) => None,
                Err(e) => return Err(e),
            }
        } else {
            None
        };
        let state = self.opts.keep_states.then(|| IterateState {
            x: x.clone(),
            d: d.clone(),
            v: v.cloned(),
        });
        self.trace.records.push(TraceRecord {
            t,
            rho,
            value_est,
            grad_err,
            evals: self.evals,
            x_sparsity: x.support_size(),
            state,
        });
        Ok(())
    }
}

/// Iterate held as visit counts over `T`.
struct CountIterate {
    counts: Vec<u32>,
    horizon: f64,
}

impl CountIterate {
    fn new(n: usize, horizon: usize) -> Self {
        Self {
            counts: vec![0; n],
            horizon: horizon as f64,
        }
    }

    fn step(&mut self, v: &ExtremePoint) {
        for &i in v.support() {
            self.counts[i] += 1;
        }
    }

    fn point(&self) -> ContinuousPoint {
        ContinuousPoint::new(self.counts.iter().map(|&c| c as f64 / self.horizon).collect())
            .expect("visit counts never exceed T")
    }
}

/// Stochastic continuous greedy.
///
/// For `t = 1..T`: `d_t = (1 − ρ_t) d_{t−1} + ρ_t ĝ_t` with `ĝ_t` an unbiased
/// gradient estimate at the current iterate, `v_t = argmax_{v∈C} ⟨d_t, v⟩`,
/// and `x_t = x_{t−1} + v_t / T`. Returns `x_T` and the trace.
pub fn run_scg(f: &SetObjective, c: &Constraint, cfg: &ScgConfig) -> Result<(ContinuousPoint, Trace)> {
    run_greedy_family(f, c, cfg, true)
}

/// Frank-Wolfe / continuous greedy on plain mini-batch gradients: identical
/// to [`run_scg`] except that `d_t = ĝ_t` (no averaging across iterations).
pub fn run_fw(f: &SetObjective, c: &Constraint, cfg: &ScgConfig) -> Result<(ContinuousPoint, Trace)> {
    run_greedy_family(f, c, cfg, false)
}

fn run_greedy_family(
    f: &SetObjective,
    c: &Constraint,
    cfg: &ScgConfig,
    averaged: bool,
) -> Result<(ContinuousPoint, Trace)> {
    cfg.validate()?;
    let n = f.n();
    check_dim(n, c.n())?;
    let mut rec = Recorder::new(f, &cfg.trace, cfg.gradient == GradientSource::Exact)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut iterate = CountIterate::new(n, cfg.horizon);
    let mut x = iterate.point();
    let mut d = GradientVector::zeros(n);
    rec.record(0, cfg.horizon, None, None, &x, &d, None)?;

    for t in 1..=cfg.horizon {
        let g = rec.gradient(cfg.gradient, &x, cfg.batch, &mut rng)?;
        let rho = if averaged {
            let rho = cfg.schedule.rho(t)?;
            let blended = d
                .as_slice()
                .iter()
                .zip(g.as_slice())
                .map(|(dp, gt)| (1.0 - rho) * dp + rho * gt)
                .collect();
            d = GradientVector::new(blended)?;
            Some(rho)
        } else {
            d = g;
            None
        };
        let grad_err = match cfg.gradient {
            GradientSource::Exact if !cfg.trace.exact_diagnostics => None,
            _ => rec.exact_gradient(&x).transpose()?.map(|truth| truth.sq_dist(&d)),
        };
        let v = c.lmo(&d)?;
        iterate.step(&v);
        x = iterate.point();
        rec.record(t, cfg.horizon, rho, grad_err, &x, &d, Some(&v))?;
    }
    Ok((x, rec.trace))
}

/// Projected stochastic gradient ascent with steps `c/√t`:
/// `x_t = Π_C(x_{t−1} + (c/√t) ĝ_t)`, from `x_0 = 0`. Returns the final
/// iterate; the trace keeps the whole path.
pub fn run_sga(
    f: &SetObjective,
    c: &Constraint,
    cfg: &ScgConfig,
    step_constant: f64,
) -> Result<(ContinuousPoint, Trace)> {
    cfg.validate()?;
    if !c.supports_projection() {
        return Err(Error::capability(
            "projected gradient ascent needs a cardinality or partition constraint",
        ));
    }
    if !step_constant.is_finite() || step_constant < 0.0 {
        return Err(Error::arg("SGA step constant must be finite and nonnegative"));
    }
    let n = f.n();
    check_dim(n, c.n())?;
    let mut rec = Recorder::new(f, &cfg.trace, cfg.gradient == GradientSource::Exact)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut x = ContinuousPoint::zeros(n);
    rec.record(0, cfg.horizon, None, None, &x, &GradientVector::zeros(n), None)?;

    for t in 1..=cfg.horizon {
        let g = rec.gradient(cfg.gradient, &x, cfg.batch, &mut rng)?;
        let grad_err = if cfg.trace.exact_diagnostics {
            rec.exact_gradient(&x).transpose()?.map(|truth| truth.sq_dist(&g))
        } else {
            None
        };
        let mu = step_constant / (t as f64).sqrt();
        let ascent: Vec<f64> = x
            .as_slice()
            .iter()
            .zip(g.as_slice())
            .map(|(xi, gi)| xi + mu * gi)
            .collect();
        x = c.project(&ascent)?;
        rec.record(t, cfg.horizon, None, grad_err, &x, &g, None)?;
    }
    Ok((x, rec.trace))
}

/// Greedy on sampled scenarios: each of the `k` rounds draws `batch` distinct
/// scenarios (all of them when `batch >= N`), scores every remaining element
/// by its average marginal gain on that sample and adds the best one (lowest
/// index on ties). Each round is charged `n · batch` evaluations.
pub fn run_batch_greedy(
    f: &SetObjective,
    k: usize,
    batch: usize,
    seed: u64,
    opts: &TraceOptions,
) -> Result<(Vec<usize>, Trace)> {
    let n = f.n();
    if k > n {
        return Err(Error::arg(format!("greedy budget k = {k} exceeds n = {n}")));
    }
    if batch == 0 {
        return Err(Error::arg("mini-batch size B must be at least 1"));
    }
    let scenarios = f.scenario_count();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut member = vec![false; n];
    let mut selected = Vec::with_capacity(k);
    let mut gains = vec![0.0; n];
    let mut trace = Trace::default();
    let mut evals = 0u64;

    let mut record = |t: usize, member: &[bool], selected: &[usize], evals: u64| -> Result<()> {
        let value_est = if opts.exact_diagnostics || (opts.value_every > 0 && (t.is_multiple_of(opts.value_every) || t == k)) {
            Some(f.expected_value(selected)?)
        } else {
            None
        };
        let state = opts.keep_states.then(|| IterateState {
            x: ContinuousPoint::indicator(n, selected).expect("selected items are in range"),
            d: GradientVector::zeros(n),
            v: None,
        });
        trace.records.push(TraceRecord {
            t,
            rho: None,
            value_est,
            grad_err: None,
            evals,
            x_sparsity: member.iter().filter(|m| **m).count(),
            state,
        });
        Ok(())
    };
    record(0, &member, &selected, evals)?;

    for round in 1..=k {
        let sample: Vec<usize> = if batch >= scenarios {
            (0..scenarios).collect()
        } else {
            index::sample(&mut rng, scenarios, batch).into_vec()
        };
        gains.iter_mut().for_each(|g| *g = 0.0);
        for &z in &sample {
            f.accumulate_marginals(z, &member, &mut gains);
        }
        let best = (0..n)
            .filter(|&i| !member[i])
            .fold(None::<usize>, |best, i| match best {
                Some(b) if gains[b] >= gains[i] => Some(b),
                _ => Some(i),
            })
            .expect("k <= n leaves a candidate every round");
        member[best] = true;
        selected.push(best);
        evals += (n * batch) as u64;
        record(round, &member, &selected, evals)?;
    }
    selected.sort_unstable();
    Ok((selected, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::submodular::RatingMatrix;

    #[test]
    fn rho_values() {
        assert!((rho_schedule(1).unwrap() - 4.0 / 9f64.powf(2.0 / 3.0)).abs() < 1e-15);
        assert!((rho_schedule(1).unwrap() - 0.92448).abs() < 1e-5);
        assert!((rho_schedule(19).unwrap() - 4.0 / 9.0).abs() < 1e-12);
        assert!(rho_schedule(0).is_err());
        let mut prev = rho_schedule(1).unwrap();
        for t in 2..5000 {
            let r = rho_schedule(t).unwrap();
            assert!(r < prev && r > 0.0);
            prev = r;
        }
        assert!((RhoSchedule::Experiments.rho(8).unwrap() - 0.125).abs() < 1e-15);
    }

    fn modular() -> SetObjective {
        SetObjective::modular(&[3.0, 1.0, 2.0]).unwrap()
    }

    #[test]
    fn scg_single_step_is_one_extreme_point() {
        let f = SetObjective::facility_location(
            RatingMatrix::from_dense(&[vec![5.0, 0.0, 1.0], vec![3.0, 4.0, 0.0]]).unwrap(),
        );
        let c = Constraint::cardinality(3, 2).unwrap();
        let cfg = ScgConfig::new(1, 1, 7).with_trace(TraceOptions {
            keep_states: true,
            ..Default::default()
        });
        let (x, trace) = run_scg(&f, &c, &cfg).unwrap();
        assert_eq!(trace.len(), 2);
        let last = trace.records[1].state.as_ref().unwrap();
        let v = last.v.as_ref().unwrap();
        assert_eq!(x.as_slice(), v.coords());
        // d_1 = ρ_1 ĝ_1 with d_0 = 0: recompute ĝ_1 from the same seed
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let g = f.stochastic_gradient(&ContinuousPoint::zeros(3), 1, &mut rng).unwrap();
        let rho = rho_schedule(1).unwrap();
        for (d, g) in last.d.as_slice().iter().zip(g.as_slice()) {
            assert_eq!(*d, rho * g);
        }
    }

    #[test]
    fn constant_gradient_fixed_point() {
        let c = Constraint::cardinality(3, 2).unwrap();
        for horizon in [1, 2, 7, 40] {
            let cfg = ScgConfig::new(horizon, 1, 0)
                .with_gradient(GradientSource::Exact)
                .with_trace(TraceOptions {
                    keep_states: true,
                    ..Default::default()
                });
            let (x, trace) = run_scg(&modular(), &c, &cfg).unwrap();
            assert_eq!(x.as_slice(), &[1.0, 0.0, 1.0]);
            for r in &trace.records[1..] {
                assert_eq!(r.state.as_ref().unwrap().v.as_ref().unwrap().support(), &[0, 2]);
            }
            let (x_fw, trace_fw) = run_fw(&modular(), &c, &cfg).unwrap();
            assert_eq!(x_fw, x);
            for (a, b) in trace.records.iter().zip(&trace_fw.records) {
                assert_eq!(a.state.as_ref().unwrap().x, b.state.as_ref().unwrap().x);
            }
        }
    }

    #[test]
    fn fw_single_step() {
        let f = SetObjective::modular(&[0.5, 2.0]).unwrap();
        let c = Constraint::cardinality(2, 1).unwrap();
        let (x, trace) = run_fw(&f, &c, &ScgConfig::new(1, 3, 1)).unwrap();
        assert_eq!(x.as_slice(), &[0.0, 1.0]);
        assert_eq!(trace.total_evals(), 2 * 3);
    }

    #[test]
    fn sga_examples() {
        let c = Constraint::cardinality(3, 2).unwrap();
        let (x, _) = run_sga(&modular(), &c, &ScgConfig::new(20, 1, 3), 0.0).unwrap();
        assert_eq!(x, ContinuousPoint::zeros(3));

        let one = SetObjective::explicit_table(1, vec![0.0, 1.0]).unwrap();
        let c1 = Constraint::cardinality(1, 1).unwrap();
        let cfg = ScgConfig::new(10, 1, 3).with_trace(TraceOptions {
            keep_states: true,
            ..Default::default()
        });
        let (x, trace) = run_sga(&one, &c1, &cfg, 10.0).unwrap();
        assert_eq!(x.as_slice(), &[1.0]);
        for r in &trace.records[1..] {
            assert_eq!(r.state.as_ref().unwrap().x.as_slice(), &[1.0]);
        }

        let o = Constraint::independence_oracle(3, "free", 3, |_| true).unwrap();
        assert!(matches!(
            run_sga(&modular(), &o, &ScgConfig::new(5, 1, 0), 1.0),
            Err(Error::Capability(_))
        ));
    }

    #[test]
    fn batch_greedy_examples() {
        let f = SetObjective::facility_location(
            RatingMatrix::from_dense(&[vec![5.0, 0.0, 1.0], vec![3.0, 4.0, 0.0]]).unwrap(),
        );
        let opts = TraceOptions {
            value_every: 1,
            ..Default::default()
        };
        let (set, trace) = run_batch_greedy(&f, 2, 2, 0, &opts).unwrap();
        assert_eq!(set, vec![0, 1]);
        assert_eq!(trace.records.last().unwrap().value_est, Some(4.5));
        assert_eq!(trace.total_evals(), 3 * 2 * 2);

        let (full, _) = run_batch_greedy(&f, 3, 1, 5, &opts).unwrap();
        assert_eq!(full, vec![0, 1, 2]);

        let a = run_batch_greedy(&f, 2, 1, 11, &opts).unwrap();
        let b = run_batch_greedy(&f, 2, 1, 11, &opts).unwrap();
        assert_eq!(a, b);
        assert!(run_batch_greedy(&f, 4, 1, 0, &opts).is_err());
    }

    #[test]
    fn config_validation() {
        let c = Constraint::cardinality(3, 2).unwrap();
        assert!(run_scg(&modular(), &c, &ScgConfig::new(0, 1, 0)).is_err());
        assert!(run_scg(&modular(), &c, &ScgConfig::new(3, 0, 0)).is_err());
        let c4 = Constraint::cardinality(4, 2).unwrap();
        assert!(matches!(
            run_scg(&modular(), &c4, &ScgConfig::new(3, 1, 0)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn trace_csv_layout() {
        let c = Constraint::cardinality(3, 2).unwrap();
        let cfg = ScgConfig::new(2, 1, 0).with_trace(TraceOptions {
            exact_diagnostics: true,
            keep_states: true,
            value_every: 0,
        });
        let (_, trace) = run_scg(&modular(), &c, &cfg).unwrap();
        let mut buf = Vec::new();
        trace.write_csv(&mut buf, true).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "t,rho,value_est,grad_err,evals,x_sparsity,x");
        assert_eq!(lines.len(), 4);
        assert!(lines[1].starts_with("0,,0,,0,0,0;0;0"));
        assert!(lines[2].ends_with(",0.5;0;0.5"));
    }
}

//! Independent oracles and statistical checks.
//!
//! Everything here is deliberately naive (exhaustive enumeration, plain
//! least squares) so it can serve as ground truth for the optimized paths.

use std::fmt;
use std::io::{self, Write};

use rand::Rng;

use crate::constraints::Constraint;
use crate::error::{Error, Result};
use crate::submodular::{check_dim, ContinuousPoint, GradientVector, MultilinearOracle, SetObjective, MAX_EXACT_N};

const BRUTE_FORCE_GENERAL_MAX_N: usize = 16;
const LIPSCHITZ_MAX_N: usize = 12;
const AUDIT_MAX_N: usize = 10;
const AUDIT_TOL: f64 = 1e-12;

/// Exhaustive `max f(S)` over independent sets. Ties go to the
/// lexicographically smallest sorted index list.
pub fn brute_force_opt(f: &SetObjective, c: &Constraint) -> Result<(Vec<usize>, f64)> {
    let n = f.n();
    check_dim(n, c.n())?;
    let limit = if c.cardinality_k().is_some() {
        MAX_EXACT_N
    } else {
        BRUTE_FORCE_GENERAL_MAX_N
    };
    if n > limit {
        return Err(Error::Capability(format!(
            "brute force is limited to n <= {limit} for this constraint (got {n})"
        )));
    }
    let k = c.cardinality_k();
    let mut best: Option<(Vec<usize>, f64)> = None;
    let mut set = Vec::with_capacity(n);
    for mask in 0usize..1 << n {
        if let Some(k) = k {
            if mask.count_ones() as usize > k {
                continue;
            }
        }
        set.clear();
        set.extend((0..n).filter(|i| mask >> i & 1 == 1));
        if k.is_none() && !c.is_independent(&set) {
            continue;
        }
        let value = f.expected_value(&set)?;
        let better = match &best {
            None => true,
            Some((s, v)) => value > *v || (value == *v && set < *s),
        };
        if better {
            best = Some((set.clone(), value));
        }
    }
    Ok(best.expect("the empty set is always independent"))
}

/// Largest deviation between central differences of `F` and the exact
/// gradient: `max_i |(F(x + h e_i) − F(x − h e_i)) / 2h − ∂_i F(x)|`.
pub fn fd_gradient_check(f: &SetObjective, x: &ContinuousPoint, h: f64) -> Result<f64> {
    check_dim(f.n(), x.len())?;
    if !(h > 0.0 && h < 0.5) {
        return Err(Error::InvalidArgument(format!("step h must lie in (0, 0.5), got {h}")));
    }
    if x.as_slice().iter().any(|&v| v < h || v > 1.0 - h) {
        return Err(Error::InvalidArgument(format!(
            "finite differences need every coordinate in [h, 1 - h] (h = {h})"
        )));
    }
    let oracle = MultilinearOracle::new(f)?;
    let grad = oracle.gradient(x)?;
    let mut worst = 0.0f64;
    for (i, &gi) in grad.as_slice().iter().enumerate() {
        let xi = x.as_slice()[i];
        let hi = oracle.value(&x.with_coord(i, xi + h)?)?;
        let lo = oracle.value(&x.with_coord(i, xi - h)?)?;
        worst = worst.max(((hi - lo) / (2.0 * h) - gi).abs());
    }
    Ok(worst)
}

/// Least-squares fit of `log(error) = intercept + slope · log(t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub window: (usize, usize),
}

/// Fits a power law to the `(t, error)` points with `t` in the inclusive
/// window. Needs at least 10 points; every error in the window must be
/// positive.
pub fn decay_slope(errors: &[(usize, f64)], window: (usize, usize)) -> Result<DecayFit> {
    let (lo, hi) = window;
    if lo == 0 || lo > hi {
        return Err(Error::InvalidArgument(format!("bad fit window {window:?}")));
    }
    let pts: Vec<(f64, f64)> = errors
        .iter()
        .filter(|(t, _)| (lo..=hi).contains(t))
        .map(|&(t, e)| {
            if e > 0.0 && e.is_finite() {
                Ok(((t as f64).ln(), e.ln()))
            } else {
                Err(Error::InvalidArgument(format!("error at t = {t} must be positive, got {e}")))
            }
        })
        .collect::<Result<_>>()?;
    if pts.len() < 10 {
        return Err(Error::InvalidArgument(format!(
            "decay fit needs at least 10 points in the window, got {}",
            pts.len()
        )));
    }
    let m = pts.len() as f64;
    let mean_x = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let mean_y = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidArgument("decay fit needs at least two distinct t".into()));
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let ss_tot: f64 = pts.iter().map(|p| (p.1 - mean_y).powi(2)).sum();
    let ss_res: f64 = pts
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum();
    let r_squared = if ss_tot == 0.0 { 1.0 } else { 1.0 - ss_res / ss_tot };
    Ok(DecayFit {
        slope,
        intercept,
        r_squared,
        window,
    })
}

/// Largest observed ratio
/// `max_j |∇_j F(x + v/T) − ∇_j F(x)| / (m_f √r ‖v‖ / T)` over random
/// ascent steps of the kind SCG takes: `x` is `1/T` times a sum of fewer than
/// `T` extreme points and `v` is another extreme point. Values above one
/// break the coordinate-wise Lipschitz bound. A zero step scores zero.
pub fn lipschitz_scan<R: Rng + ?Sized>(
    f: &SetObjective,
    c: &Constraint,
    horizon: usize,
    trials: usize,
    rng: &mut R,
) -> Result<f64> {
    let n = f.n();
    check_dim(n, c.n())?;
    if n > LIPSCHITZ_MAX_N {
        return Err(Error::Capability(format!("Lipschitz scan needs n <= {LIPSCHITZ_MAX_N}")));
    }
    if horizon == 0 {
        return Err(Error::InvalidArgument("horizon must be at least 1".into()));
    }
    let oracle = MultilinearOracle::new(f)?;
    let scale = f.max_singleton()? * (c.rank() as f64).sqrt();
    let t_inv = 1.0 / horizon as f64;
    let random_vertex = |rng: &mut R| -> Result<Vec<usize>> {
        let d = GradientVector::new((0..n).map(|_| rng.gen_range(-1.0..1.0)).collect())?;
        Ok(c.lmo(&d)?.support().to_vec())
    };
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let steps = rng.gen_range(0..horizon);
        let mut counts = vec![0u32; n];
        for _ in 0..steps {
            for i in random_vertex(rng)? {
                counts[i] += 1;
            }
        }
        let v = random_vertex(rng)?;
        if v.is_empty() {
            continue;
        }
        let x = ContinuousPoint::new(counts.iter().map(|&k| k as f64 * t_inv).collect())?;
        let mut moved = counts.clone();
        for &i in &v {
            moved[i] += 1;
        }
        let y = ContinuousPoint::new(moved.iter().map(|&k| k as f64 * t_inv).collect())?;
        let (gx, gy) = (oracle.gradient(&x)?, oracle.gradient(&y)?);
        let change = gx
            .as_slice()
            .iter()
            .zip(gy.as_slice())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let bound = scale * (v.len() as f64).sqrt() * t_inv;
        let ratio = if change == 0.0 { 0.0 } else { change / bound };
        worst = worst.max(ratio);
    }
    Ok(worst)
}

pub fn approx_ratio(achieved: f64, opt: f64) -> Result<f64> {
    if opt.is_nan() || opt <= 0.0 {
        return Err(Error::InvalidArgument(format!("OPT must be positive, got {opt}")));
    }
    Ok(achieved / opt)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AuditReport {
    pub submodular_violations: usize,
    pub monotone_violations: usize,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.submodular_violations == 0 && self.monotone_violations == 0
    }
}

/// Counts violations of `f(A) + f(B) >= f(A∩B) + f(A∪B)` over all pairs and
/// of `f(A) <= f(A ∪ {i})` over all `A, i`, for the expected function.
pub fn audit(f: &SetObjective) -> Result<AuditReport> {
    let n = f.n();
    if n > AUDIT_MAX_N {
        return Err(Error::Capability(format!("exhaustive audit needs n <= {AUDIT_MAX_N}")));
    }
    let t = f.value_table()?;
    let tol = AUDIT_TOL * t.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let full = t.len();
    let mut report = AuditReport {
        submodular_violations: 0,
        monotone_violations: 0,
    };
    for a in 0..full {
        for b in a + 1..full {
            if t[a] + t[b] < t[a & b] + t[a | b] - tol {
                report.submodular_violations += 1;
            }
        }
        for i in 0..n {
            if t[a | 1 << i] < t[a] - tol {
                report.monotone_violations += 1;
            }
        }
    }
    Ok(report)
}

/// True iff the expected function is monotone and submodular.
pub fn submodularity_audit(f: &SetObjective) -> Result<bool> {
    audit(f).map(|r| r.passed())
}

/// One line of a verdict file.
#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub name: String,
    pub metric: f64,
    /// Human-readable pass condition, e.g. `<= 1e-9`.
    pub threshold: String,
    pub status: VerdictStatus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerdictStatus {
    Pass,
    Fail,
    /// The check does not apply at this problem size.
    Skip,
}

impl fmt::Display for VerdictStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            VerdictStatus::Pass => "pass",
            VerdictStatus::Fail => "fail",
            VerdictStatus::Skip => "skip",
        })
    }
}

impl Verdict {
    pub fn check(name: impl Into<String>, metric: f64, threshold: impl Into<String>, ok: bool) -> Self {
        Self {
            name: name.into(),
            metric,
            threshold: threshold.into(),
            status: if ok { VerdictStatus::Pass } else { VerdictStatus::Fail },
        }
    }

    pub fn skip(name: impl Into<String>, reason: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            metric: f64::NAN,
            threshold: reason.into(),
            status: VerdictStatus::Skip,
        }
    }

    pub fn failed(&self) -> bool {
        self.status == VerdictStatus::Fail
    }
}

pub const VERDICT_CSV_HEADER: &str = "name,metric,threshold,status";

pub fn write_verdicts<W: Write>(mut out: W, verdicts: &[Verdict]) -> io::Result<()> {
    writeln!(out, "{VERDICT_CSV_HEADER}")?;
    for v in verdicts {
        let metric = if v.metric.is_nan() { String::new() } else { v.metric.to_string() };
        writeln!(out, "{},{},{},{}", v.name, metric, v.threshold.replace(',', ";"), v.status)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::submodular::RatingMatrix;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn three_items() -> SetObjective {
        SetObjective::facility_location(
            RatingMatrix::from_dense(&[vec![5.0, 0.0, 1.0], vec![3.0, 4.0, 0.0]]).unwrap(),
        )
    }

    #[test]
    fn brute_force_examples() {
        let c = Constraint::cardinality(3, 2).unwrap();
        assert_eq!(brute_force_opt(&three_items(), &c).unwrap(), (vec![0, 1], 4.5));
        // item 2 adds nothing to facility location here, so the tie keeps the
        // lexicographically smaller {0, 1}; a strictly monotone f takes everything
        let all = Constraint::cardinality(3, 3).unwrap();
        assert_eq!(brute_force_opt(&three_items(), &all).unwrap().0, vec![0, 1]);
        let con = SetObjective::concave_over_modular(
            RatingMatrix::from_dense(&[vec![5.0, 0.0, 1.0], vec![3.0, 4.0, 0.0]]).unwrap(),
        );
        assert_eq!(brute_force_opt(&con, &all).unwrap().0, vec![0, 1, 2]);
        let w = SetObjective::modular(&[3.0, 1.0, 2.0]).unwrap();
        assert_eq!(brute_force_opt(&w, &c).unwrap(), (vec![0, 2], 5.0));
    }

    #[test]
    fn brute_force_over_partition() {
        let w = SetObjective::modular(&[5.0, 4.0, 3.0, 2.0]).unwrap();
        let p = Constraint::partition(4, &[vec![0, 1], vec![2, 3]], &[1, 1]).unwrap();
        assert_eq!(brute_force_opt(&w, &p).unwrap(), (vec![0, 2], 8.0));
    }

    #[test]
    fn fd_examples() {
        let f = SetObjective::explicit_table(2, vec![0.0, 1.0, 1.0, 1.5]).unwrap();
        let x = ContinuousPoint::filled(2, 0.5).unwrap();
        assert!(fd_gradient_check(&f, &x, 0.1).unwrap() < 1e-12);
        let constant = SetObjective::explicit_table(2, vec![2.0; 4]).unwrap();
        assert_eq!(fd_gradient_check(&constant, &x, 0.1).unwrap(), 0.0);
        let edge = ContinuousPoint::new(vec![0.05, 0.5]).unwrap();
        assert!(fd_gradient_check(&f, &edge, 0.1).is_err());
    }

    #[test]
    fn decay_recovers_power_law() {
        let pts: Vec<(usize, f64)> = (1..=500).map(|t| (t, 7.0 * (t as f64).powf(-2.0 / 3.0))).collect();
        let fit = decay_slope(&pts, (100, 500)).unwrap();
        assert!((fit.slope + 2.0 / 3.0).abs() < 1e-9);
        assert!((fit.r_squared - 1.0).abs() < 1e-9);
        assert!((fit.intercept - 7f64.ln()).abs() < 1e-9);

        let flat: Vec<(usize, f64)> = (1..=50).map(|t| (t, 0.3)).collect();
        assert_eq!(decay_slope(&flat, (1, 50)).unwrap().slope, 0.0);

        let bad: Vec<(usize, f64)> = (1..=50).map(|t| (t, if t == 20 { 0.0 } else { 1.0 })).collect();
        assert!(decay_slope(&bad, (1, 50)).is_err());
        assert!(decay_slope(&pts, (100, 105)).is_err());
    }

    #[test]
    fn lipschitz_degenerate_cases() {
        let w = SetObjective::modular(&[3.0, 1.0, 2.0, 0.5]).unwrap();
        let c = Constraint::cardinality(4, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(lipschitz_scan(&w, &c, 10, 100, &mut rng).unwrap() < 1e-12);
        let f = three_items();
        let c3 = Constraint::cardinality(3, 2).unwrap();
        let r = lipschitz_scan(&f, &c3, 20, 200, &mut rng).unwrap();
        assert!(r > 0.0 && r <= 1.0 + 1e-9, "{r}");
    }

    #[test]
    fn ratio_examples() {
        assert_eq!(approx_ratio(3.0, 3.0).unwrap(), 1.0);
        let e = 1.0 - (-1.0f64).exp();
        assert!((approx_ratio(e * 2.0, 2.0).unwrap() - 0.632_120_558_828_557_7).abs() < 1e-15);
        assert!(approx_ratio(1.0, 0.0).is_err());
    }

    #[test]
    fn audit_examples() {
        assert!(submodularity_audit(&three_items()).unwrap());
        let con = SetObjective::concave_over_modular(
            RatingMatrix::from_dense(&[vec![5.0, 0.0, 1.0], vec![3.0, 4.0, 0.0]]).unwrap(),
        );
        assert!(submodularity_audit(&con).unwrap());
        let superm = SetObjective::explicit_table(2, vec![0.0, 1.0, 1.0, 3.0]).unwrap();
        assert!(!submodularity_audit(&superm).unwrap());
    }

    #[test]
    fn verdict_file_format() {
        let mut buf = Vec::new();
        write_verdicts(
            &mut buf,
            &[
                Verdict::check("fd", 1e-13, "<= 1e-9", true),
                Verdict::skip("decay", "needs T >= 110"),
            ],
        )
        .unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "name,metric,threshold,status\nfd,0.0000000000001,<= 1e-9,pass\ndecay,,needs T >= 110,skip\n"
        );
    }
}

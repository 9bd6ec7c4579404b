//! Fractional points back to sets.

use rand::Rng;

use crate::constraints::Constraint;
use crate::error::{Error, Result};
use crate::submodular::{check_dim, ContinuousPoint, SetObjective};

const SNAP: f64 = 1e-12;
const FEASIBILITY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct RoundingOutcome {
    /// Sorted element indices.
    pub set: Vec<usize>,
    pub cardinality: usize,
    pub value: Option<f64>,
}

impl RoundingOutcome {
    fn new(set: Vec<usize>) -> Self {
        Self {
            cardinality: set.len(),
            set,
            value: None,
        }
    }

    /// Fills `value` with the exact expected objective of the set.
    pub fn evaluate(mut self, f: &SetObjective) -> Result<Self> {
        self.value = Some(f.expected_value(&self.set)?);
        Ok(self)
    }
}

/// Randomized pipage rounding over a cardinality or partition matroid.
///
/// Inside each block the two lowest-index fractional coordinates `i < j`
/// exchange mass along `e_i − e_j` until one of them is integral: with
/// `up = min(1 − x_i, x_j)` and `down = min(x_i, 1 − x_j)`, the move is `+up`
/// with probability `down / (up + down)` and `−down` otherwise, which keeps
/// `E[x]` fixed. A lone fractional coordinate left in a block is rounded up
/// with probability equal to its value; the block sum stays below the cap
/// because the cap is an integer. The procedure never looks at `f`.
pub fn pipage_round<R: Rng + ?Sized>(
    x: &ContinuousPoint,
    c: &Constraint,
    rng: &mut R,
) -> Result<RoundingOutcome> {
    check_dim(c.n(), x.len())?;
    let (blocks, _) = c.blocks().ok_or_else(|| {
        Error::capability("pipage rounding is implemented for cardinality and partition constraints")
    })?;
    if !c.is_feasible(x, FEASIBILITY_TOL)? {
        return Err(Error::Infeasible(format!("point is outside {c} (tolerance {FEASIBILITY_TOL})")));
    }
    let mut y: Vec<f64> = x.as_slice().iter().map(|&v| snap(v)).collect();

    for block in &blocks {
        loop {
            let mut fractional = block.iter().copied().filter(|&i| is_fractional(y[i]));
            let Some(i) = fractional.next() else { break };
            match fractional.next() {
                Some(j) => {
                    let up = (1.0 - y[i]).min(y[j]);
                    let down = y[i].min(1.0 - y[j]);
                    if rng.gen::<f64>() * (up + down) < down {
                        // x_i += up, x_j -= up; whichever hits its bound is set exactly
                        if 1.0 - y[i] <= y[j] {
                            y[j] -= 1.0 - y[i];
                            y[i] = 1.0;
                        } else {
                            y[i] += y[j];
                            y[j] = 0.0;
                        }
                    } else if y[i] <= 1.0 - y[j] {
                        y[j] += y[i];
                        y[i] = 0.0;
                    } else {
                        y[i] -= 1.0 - y[j];
                        y[j] = 1.0;
                    }
                    y[i] = snap(y[i]);
                    y[j] = snap(y[j]);
                }
                None => {
                    y[i] = if rng.gen::<f64>() < y[i] { 1.0 } else { 0.0 };
                }
            }
        }
    }
    let set: Vec<usize> = (0..y.len()).filter(|&i| y[i] == 1.0).collect();
    debug_assert!(c.is_independent(&set));
    Ok(RoundingOutcome::new(set))
}

/// Includes each element independently with probability `x_i`. The result
/// is not constrained to any matroid.
pub fn independent_round<R: Rng + ?Sized>(x: &ContinuousPoint, rng: &mut R) -> Vec<usize> {
    x.as_slice()
        .iter()
        .enumerate()
        .filter(|(_, &p)| rng.gen::<f64>() < p)
        .map(|(i, _)| i)
        .collect()
}

fn snap(v: f64) -> f64 {
    if v < SNAP {
        0.0
    } else if v > 1.0 - SNAP {
        1.0
    } else {
        v
    }
}

fn is_fractional(v: f64) -> bool {
    v != 0.0 && v != 1.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn integral_points_are_unchanged() {
        let c = Constraint::cardinality(4, 2).unwrap();
        let x = ContinuousPoint::new(vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let out = pipage_round(&x, &c, &mut rng).unwrap();
        assert_eq!(out.set, vec![0, 3]);
        assert_eq!(out.cardinality, 2);
    }

    #[test]
    fn two_halves_split_evenly() {
        let c = Constraint::cardinality(2, 1).unwrap();
        let x = ContinuousPoint::new(vec![0.5, 0.5]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let trials = 20_000;
        let mut first = 0;
        for _ in 0..trials {
            let out = pipage_round(&x, &c, &mut rng).unwrap();
            assert_eq!(out.cardinality, 1);
            if out.set == [0] {
                first += 1;
            }
        }
        // binomial(20000, 0.5): sd ≈ 70.7
        assert!((first as f64 - 10_000.0).abs() < 3.0 * 70.8, "{first}");
    }

    #[test]
    fn rejects_infeasible_and_general_matroids() {
        let c = Constraint::cardinality(3, 1).unwrap();
        let x = ContinuousPoint::new(vec![0.6, 0.6, 0.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(pipage_round(&x, &c, &mut rng), Err(Error::Infeasible(_))));
        let o = Constraint::independence_oracle(2, "free", 2, |_| true).unwrap();
        assert!(matches!(
            pipage_round(&ContinuousPoint::zeros(2), &o, &mut rng),
            Err(Error::Capability(_))
        ));
    }

    #[test]
    fn snaps_float_residue() {
        let c = Constraint::cardinality(3, 2).unwrap();
        let x = ContinuousPoint::new(vec![1.0 - 1e-13, 1e-14, 1.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(pipage_round(&x, &c, &mut rng).unwrap().set, vec![0, 2]);
    }

    #[test]
    fn partition_blocks_respect_caps() {
        let c = Constraint::partition(5, &[vec![0, 2, 4], vec![1, 3]], &[2, 1]).unwrap();
        let x = ContinuousPoint::new(vec![0.7, 0.5, 0.6, 0.5, 0.7]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..2000 {
            let out = pipage_round(&x, &c, &mut rng).unwrap();
            assert!(c.is_independent(&out.set));
            // tight blocks come out full
            assert_eq!(out.cardinality, 3);
        }
    }

    #[test]
    fn independent_rounding_extremes() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(independent_round(&ContinuousPoint::zeros(6), &mut rng).is_empty());
        assert_eq!(independent_round(&ContinuousPoint::ones(4), &mut rng), vec![0, 1, 2, 3]);
        let half = ContinuousPoint::filled(10, 0.5).unwrap();
        let trials = 20_000;
        let total: usize = (0..trials).map(|_| independent_round(&half, &mut rng).len()).sum();
        let mean = total as f64 / trials as f64;
        // Var|S| = 2.5, so the standard error of the mean is sqrt(2.5 / trials)
        assert!((mean - 5.0).abs() < 3.0 * (2.5f64 / trials as f64).sqrt(), "{mean}");
    }
}

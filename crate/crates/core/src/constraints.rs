//! Matroid-polytope constraints.
//!
//! Every shipped body is the convex hull of indicator vectors of the
//! independent sets of a matroid, so it is down-closed and its extreme points
//! are 0/1 vectors. The linear maximization oracle is the matroid greedy
//! algorithm restricted to positive coordinates.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::submodular::{check_dim, check_index, ContinuousPoint, GradientVector};

/// Independence test on a sorted list of element indices.
pub type IndependenceFn = dyn Fn(&[usize]) -> bool + Send + Sync;

/// Oracle-backed matroids are axiom-checked exhaustively up to this size.
const AXIOM_CHECK_MAX_N: usize = 8;
/// Polytope membership for oracle-backed matroids enumerates `2^n` rank
/// inequalities up to this size.
const ORACLE_FEASIBILITY_MAX_N: usize = 12;

#[derive(Clone)]
enum Kind {
    Cardinality {
        k: usize,
    },
    Partition {
        block_of: Vec<usize>,
        caps: Vec<usize>,
    },
    Oracle {
        name: String,
        independent: Arc<IndependenceFn>,
        rank: usize,
    },
}

#[derive(Clone)]
pub struct Constraint {
    n: usize,
    kind: Kind,
}

impl fmt::Debug for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Constraint(n={}, {})", self.n, self)
    }
}

/// Renders the config grammar form of the constraint.
impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            Kind::Cardinality { k } => write!(f, "cardinality:{k}"),
            Kind::Partition { block_of, caps } => {
                let join = |v: &[usize]| {
                    v.iter().map(usize::to_string).collect::<Vec<_>>().join(",")
                };
                write!(f, "partition:{}|{}", join(block_of), join(caps))
            }
            Kind::Oracle { name, .. } => write!(f, "matroid:{name}"),
        }
    }
}

impl Constraint {
    /// `{x ∈ [0,1]^n : Σ x_i ≤ k}`.
    pub fn cardinality(n: usize, k: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::arg("constraint dimension must be positive"));
        }
        if k == 0 || k > n {
            return Err(Error::arg(format!("cardinality k must satisfy 1 <= k <= n ({n}), got {k}")));
        }
        Ok(Self {
            n,
            kind: Kind::Cardinality { k },
        })
    }

    /// Partition matroid from explicit disjoint blocks covering `0..n`.
    pub fn partition(n: usize, blocks: &[Vec<usize>], caps: &[usize]) -> Result<Self> {
        if blocks.len() != caps.len() {
            return Err(Error::arg("partition needs one cap per block"));
        }
        let mut block_of = vec![usize::MAX; n];
        for (b, block) in blocks.iter().enumerate() {
            for &i in block {
                check_index("element", i, n)?;
                if block_of[i] != usize::MAX {
                    return Err(Error::arg(format!("element {i} appears in two blocks")));
                }
                block_of[i] = b;
            }
        }
        Self::partition_from_assignment(block_of, caps.to_vec())
    }

    /// Partition matroid where `block_of[i]` names the block of element `i`.
    pub fn partition_from_assignment(block_of: Vec<usize>, caps: Vec<usize>) -> Result<Self> {
        let n = block_of.len();
        if n == 0 {
            return Err(Error::arg("constraint dimension must be positive"));
        }
        let mut sizes = vec![0usize; caps.len()];
        for (i, &b) in block_of.iter().enumerate() {
            if b >= caps.len() {
                return Err(Error::arg(format!("element {i} is not assigned to a valid block")));
            }
            sizes[b] += 1;
        }
        for (b, (&cap, &size)) in caps.iter().zip(&sizes).enumerate() {
            if cap == 0 || cap > size {
                return Err(Error::arg(format!(
                    "block {b} cap must satisfy 1 <= cap <= block size ({size}), got {cap}"
                )));
            }
        }
        Ok(Self {
            n,
            kind: Kind::Partition { block_of, caps },
        })
    }

    /// A matroid given by an independence callback and its rank.
    ///
    /// For `n <= 8` the matroid axioms and the rank are verified exhaustively.
    pub fn independence_oracle<F>(n: usize, name: &str, rank: usize, independent: F) -> Result<Self>
    where
        F: Fn(&[usize]) -> bool + Send + Sync + 'static,
    {
        if n == 0 {
            return Err(Error::arg("constraint dimension must be positive"));
        }
        if rank == 0 || rank > n {
            return Err(Error::arg(format!("matroid rank must satisfy 1 <= r <= n, got {rank}")));
        }
        let c = Self {
            n,
            kind: Kind::Oracle {
                name: name.to_string(),
                independent: Arc::new(independent),
                rank,
            },
        };
        if n <= AXIOM_CHECK_MAX_N {
            c.check_matroid_axioms()?;
        }
        Ok(c)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Size of a maximum independent set.
    pub fn rank(&self) -> usize {
        match &self.kind {
            Kind::Cardinality { k } => *k,
            Kind::Partition { caps, .. } => caps.iter().sum(),
            Kind::Oracle { rank, .. } => *rank,
        }
    }

    /// The cardinality bound, if this is a cardinality constraint.
    pub fn cardinality_k(&self) -> Option<usize> {
        match self.kind {
            Kind::Cardinality { k } => Some(k),
            _ => None,
        }
    }

    pub fn supports_projection(&self) -> bool {
        !matches!(self.kind, Kind::Oracle { .. })
    }

    /// Same constraint family with a different cardinality bound.
    pub fn with_cardinality(&self, k: usize) -> Result<Self> {
        match self.kind {
            Kind::Cardinality { .. } => Self::cardinality(self.n, k),
            _ => Err(Error::arg("only cardinality constraints can be re-parameterized by k")),
        }
    }

    /// Blocks as index lists; one block covering everything for cardinality.
    /// `None` for oracle-backed matroids.
    pub fn blocks(&self) -> Option<(Vec<Vec<usize>>, Vec<usize>)> {
        match &self.kind {
            Kind::Cardinality { k } => Some((vec![(0..self.n).collect()], vec![*k])),
            Kind::Partition { block_of, caps } => {
                let mut blocks = vec![Vec::new(); caps.len()];
                for (i, &b) in block_of.iter().enumerate() {
                    blocks[b].push(i);
                }
                Some((blocks, caps.clone()))
            }
            Kind::Oracle { .. } => None,
        }
    }

    /// Independence of a set of distinct element indices.
    pub fn is_independent(&self, set: &[usize]) -> bool {
        if set.iter().any(|&i| i >= self.n) {
            return false;
        }
        match &self.kind {
            Kind::Cardinality { k } => set.len() <= *k,
            Kind::Partition { block_of, caps } => {
                let mut used = vec![0usize; caps.len()];
                set.iter().all(|&i| {
                    let b = block_of[i];
                    used[b] += 1;
                    used[b] <= caps[b]
                })
            }
            Kind::Oracle { independent, .. } => {
                let mut sorted = set.to_vec();
                sorted.sort_unstable();
                independent(&sorted)
            }
        }
    }

    /// `argmax_{v ∈ C} ⟨d, v⟩`, returned as an extreme point.
    ///
    /// Coordinates with `d_i <= 0` never enter the support. Remaining
    /// coordinates are scanned by decreasing `d_i`, ties broken by lower
    /// index, and kept while the support stays independent.
    pub fn lmo(&self, d: &GradientVector) -> Result<ExtremePoint> {
        check_dim(self.n, d.len())?;
        let d = d.as_slice();
        let by_weight = |a: &usize, b: &usize| d[*b].total_cmp(&d[*a]).then(a.cmp(b));
        let mut positive: Vec<usize> = (0..self.n).filter(|&i| d[i] > 0.0).collect();
        let support = match &self.kind {
            Kind::Cardinality { k } => {
                if positive.len() > *k {
                    positive.select_nth_unstable_by(*k - 1, by_weight);
                    positive.truncate(*k);
                }
                positive
            }
            Kind::Partition { block_of, caps } => {
                positive.sort_unstable_by(by_weight);
                let mut used = vec![0usize; caps.len()];
                positive
                    .into_iter()
                    .filter(|&i| {
                        let b = block_of[i];
                        if used[b] < caps[b] {
                            used[b] += 1;
                            true
                        } else {
                            false
                        }
                    })
                    .collect()
            }
            Kind::Oracle {
                independent, rank, ..
            } => {
                positive.sort_unstable_by(by_weight);
                let mut chosen: Vec<usize> = Vec::with_capacity(*rank);
                let mut probe: Vec<usize> = Vec::with_capacity(*rank + 1);
                for i in positive {
                    if chosen.len() == *rank {
                        break;
                    }
                    probe.clear();
                    probe.extend_from_slice(&chosen);
                    let pos = probe.partition_point(|&j| j < i);
                    probe.insert(pos, i);
                    if independent(&probe) {
                        std::mem::swap(&mut chosen, &mut probe);
                    }
                }
                chosen
            }
        };
        Ok(ExtremePoint::from_support(self.n, support))
    }

    /// Membership of `x` in the polytope up to `tol`.
    ///
    /// Oracle-backed matroids are checked through the rank inequalities
    /// `x(A) <= rank(A)` for every subset `A`, which needs `n <= 12`.
    pub fn is_feasible(&self, x: &ContinuousPoint, tol: f64) -> Result<bool> {
        check_dim(self.n, x.len())?;
        let xs = x.as_slice();
        if xs.iter().any(|&v| v < -tol || v > 1.0 + tol) {
            return Ok(false);
        }
        match &self.kind {
            Kind::Cardinality { k } => Ok(xs.iter().sum::<f64>() <= *k as f64 + tol),
            Kind::Partition { block_of, caps } => {
                let mut sums = vec![0.0; caps.len()];
                for (i, &v) in xs.iter().enumerate() {
                    sums[block_of[i]] += v;
                }
                Ok(sums.iter().zip(caps).all(|(s, &c)| *s <= c as f64 + tol))
            }
            Kind::Oracle { .. } => {
                if self.n > ORACLE_FEASIBILITY_MAX_N {
                    return Err(Error::capability(format!(
                        "matroid polytope membership is enumerated only for n <= {ORACLE_FEASIBILITY_MAX_N}"
                    )));
                }
                let mut set = Vec::with_capacity(self.n);
                for mask in 1usize..1 << self.n {
                    set.clear();
                    set.extend((0..self.n).filter(|i| mask >> i & 1 == 1));
                    let mass: f64 = set.iter().map(|&i| xs[i]).sum();
                    if mass > self.rank_of(&set) as f64 + tol {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
        }
    }

    /// Rank of a subset: size of a maximal independent subset of it.
    pub fn rank_of(&self, set: &[usize]) -> usize {
        let mut chosen: Vec<usize> = Vec::new();
        let mut sorted = set.to_vec();
        sorted.sort_unstable();
        for i in sorted {
            chosen.push(i);
            if !self.is_independent(&chosen) {
                chosen.pop();
            }
        }
        chosen.len()
    }

    /// Euclidean projection onto the polytope (cardinality and partition
    /// only). Blocks decouple; within a block the answer is
    /// `clip(y − λ, 0, 1)` with the smallest `λ >= 0` that meets the cap.
    pub fn project(&self, y: &[f64]) -> Result<ContinuousPoint> {
        check_dim(self.n, y.len())?;
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::arg("projection input must be finite"));
        }
        let (blocks, caps) = self.blocks().ok_or_else(|| {
            Error::capability("Euclidean projection is only implemented for cardinality and partition constraints")
        })?;
        let mut out = vec![0.0; self.n];
        let mut local = Vec::new();
        for (block, cap) in blocks.iter().zip(caps) {
            local.clear();
            local.extend(block.iter().map(|&i| y[i]));
            for (&i, v) in block.iter().zip(project_capped_box(&local, cap as f64)) {
                out[i] = v;
            }
        }
        ContinuousPoint::new(out)
    }

    /// `max_{x∈C} ‖x‖ = √rank`, attained at a maximum independent set.
    pub fn diameter(&self) -> f64 {
        (self.rank() as f64).sqrt()
    }

    /// Parses `cardinality:k`, `partition:b0,b1,…|c0,c1,…` (block id per
    /// element, then cap per block) or `matroid:<name>`.
    pub fn parse(spec: &str, n: usize, registry: &MatroidRegistry) -> Result<Self> {
        let (head, rest) = spec
            .trim()
            .split_once(':')
            .ok_or_else(|| Error::arg(format!("constraint {spec:?} lacks a `kind:` prefix")))?;
        match head {
            "cardinality" => {
                let k = parse_usize(rest)?;
                Self::cardinality(n, k)
            }
            "partition" => {
                let (assign, caps) = rest
                    .split_once('|')
                    .ok_or_else(|| Error::arg("partition spec must be `b0,b1,…|c0,c1,…`"))?;
                let assign = parse_list(assign)?;
                check_dim(n, assign.len())?;
                Self::partition_from_assignment(assign, parse_list(caps)?)
            }
            "matroid" => registry.build(rest.trim(), n),
            other => Err(Error::arg(format!("unknown constraint kind {other:?}"))),
        }
    }

    fn check_matroid_axioms(&self) -> Result<()> {
        let n = self.n;
        let full = 1usize << n;
        let members = |mask: usize| -> Vec<usize> { (0..n).filter(|i| mask >> i & 1 == 1).collect() };
        let indep: Vec<bool> = (0..full).map(|m| self.is_independent(&members(m))).collect();
        if !indep[0] {
            return Err(Error::arg("matroid oracle rejects the empty set"));
        }
        let mut max_size = 0;
        for a in 0..full {
            if !indep[a] {
                continue;
            }
            max_size = max_size.max(a.count_ones() as usize);
            for i in 0..n {
                if a >> i & 1 == 1 && !indep[a & !(1 << i)] {
                    return Err(Error::arg("matroid oracle is not downward closed"));
                }
            }
            for b in 0..full {
                if indep[b] && b.count_ones() > a.count_ones() {
                    let extendable = (0..n).any(|i| b >> i & 1 == 1 && a >> i & 1 == 0 && indep[a | 1 << i]);
                    if !extendable {
                        return Err(Error::arg("matroid oracle violates the exchange property"));
                    }
                }
            }
        }
        if max_size != self.rank() {
            return Err(Error::arg(format!(
                "matroid rank hint {} differs from the true rank {max_size}",
                self.rank()
            )));
        }
        Ok(())
    }
}

/// Projection of `y` onto `{x ∈ [0,1]^m : Σ x ≤ cap}`.
pub(crate) fn project_capped_box(y: &[f64], cap: f64) -> Vec<f64> {
    let shifted = |lambda: f64| -> Vec<f64> { y.iter().map(|v| (v - lambda).clamp(0.0, 1.0)).collect() };
    let mass = |lambda: f64| -> f64 { y.iter().map(|v| (v - lambda).clamp(0.0, 1.0)).sum() };
    if mass(0.0) <= cap {
        return shifted(0.0);
    }
    // mass is continuous and nonincreasing in λ; it is 0 at λ = max(y)
    let (mut lo, mut hi) = (0.0, y.iter().copied().fold(f64::NEG_INFINITY, f64::max));
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if mass(mid) > cap {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut lambda = 0.5 * (lo + hi);
    // on the active piece the mass is affine in λ; solve it exactly
    let (mut free_sum, mut free, mut saturated) = (0.0, 0usize, 0usize);
    for &v in y {
        let s = v - lambda;
        if s >= 1.0 {
            saturated += 1;
        } else if s > 0.0 {
            free += 1;
            free_sum += v;
        }
    }
    if free > 0 {
        let exact = (free_sum + saturated as f64 - cap) / free as f64;
        if exact >= 0.0 && (mass(exact) - cap).abs() <= (mass(lambda) - cap).abs() {
            lambda = exact;
        }
    }
    shifted(lambda)
}

fn parse_usize(s: &str) -> Result<usize> {
    s.trim()
        .parse()
        .map_err(|_| Error::arg(format!("expected a nonnegative integer, got {s:?}")))
}

fn parse_list(s: &str) -> Result<Vec<usize>> {
    s.split(',').map(parse_usize).collect()
}

/// A vertex `1_I` of the matroid polytope.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtremePoint {
    coords: Vec<f64>,
    support: Vec<usize>,
}

impl ExtremePoint {
    fn from_support(n: usize, mut support: Vec<usize>) -> Self {
        support.sort_unstable();
        let mut coords = vec![0.0; n];
        for &i in &support {
            coords[i] = 1.0;
        }
        Self { coords, support }
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// Sorted indices of the ones.
    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn support_size(&self) -> usize {
        self.support.len()
    }

    pub fn to_point(&self) -> ContinuousPoint {
        ContinuousPoint::new(self.coords.clone()).expect("0/1 coordinates")
    }

    pub fn dot(&self, d: &[f64]) -> f64 {
        self.support.iter().map(|&i| d[i]).sum()
    }
}

type MatroidFactory = Arc<dyn Fn(usize) -> Result<Constraint> + Send + Sync>;

/// Named matroid plugins for the `matroid:<name>` grammar.
#[derive(Clone)]
pub struct MatroidRegistry {
    factories: HashMap<String, MatroidFactory>,
}

impl Default for MatroidRegistry {
    /// Registry with the built-in `free` matroid (every subset independent).
    fn default() -> Self {
        let mut r = Self::empty();
        r.register("free", |n| Constraint::independence_oracle(n, "free", n, |_| true));
        r
    }
}

impl MatroidRegistry {
    pub fn empty() -> Self {
        Self {
            factories: HashMap::new(),
        }
    }

    /// Registers a factory that builds the matroid for a given ground set size.
    pub fn register<F>(&mut self, name: &str, factory: F)
    where
        F: Fn(usize) -> Result<Constraint> + Send + Sync + 'static,
    {
        self.factories.insert(name.to_string(), Arc::new(factory));
    }

    pub fn build(&self, name: &str, n: usize) -> Result<Constraint> {
        let factory = self
            .factories
            .get(name)
            .ok_or_else(|| Error::arg(format!("no matroid plugin named {name:?}")))?;
        let c = factory(n)?;
        check_dim(n, c.n())?;
        Ok(c)
    }

    pub fn names(&self) -> Vec<&str> {
        let mut v: Vec<&str> = self.factories.keys().map(String::as_str).collect();
        v.sort_unstable();
        v
    }
}

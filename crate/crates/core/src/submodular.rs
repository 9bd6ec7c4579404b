//! Stochastic set functions, their multilinear extensions, and the unbiased
//! gradient estimator.
//!
//! A [`SetObjective`] is a family of scenario functions `f(S, z)` over a
//! ground set of `n` items, with `z` drawn uniformly from `N` scenarios. The
//! expected function `f(S) = (1/N) Σ_z f(S, z)` is what the optimizers
//! maximize, through its multilinear extension
//!
//! ```text
//! F(x) = Σ_{S ⊆ V} f(S) Π_{i∈S} x_i Π_{j∉S} (1 − x_j).
//! ```
//!
//! Exact evaluation of `F` and `∇F` enumerates all `2^n` subsets and is
//! capped at [`MAX_EXACT_N`]. Beyond that the stochastic estimator is the only
//! gradient route.

use rand::Rng;

use crate::error::{Error, Result};

/// Largest ground set for which `2^n` enumeration is attempted.
pub const MAX_EXACT_N: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct GroundSet {
    n: usize,
    labels: Option<Vec<String>>,
}

impl GroundSet {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::arg("ground set must contain at least one element"));
        }
        Ok(Self { n, labels: None })
    }

    pub fn with_labels(labels: Vec<String>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::arg("ground set must contain at least one element"));
        }
        let mut seen = std::collections::HashSet::new();
        for l in &labels {
            if !seen.insert(l.as_str()) {
                return Err(Error::arg(format!("duplicate element label {l:?}")));
            }
        }
        Ok(Self {
            n: labels.len(),
            labels: Some(labels),
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }
}

/// Sparse nonnegative user × item scores. Missing entries read as zero.
#[derive(Debug, Clone, PartialEq)]
pub struct RatingMatrix {
    num_users: usize,
    num_items: usize,
    // per-user (item, rating), sorted by item, no duplicates, no zeros
    rows: Vec<Vec<(usize, f64)>>,
}

impl RatingMatrix {
    /// Builds a matrix from `(user, item, rating)` triplets. A repeated
    /// `(user, item)` pair keeps the last rating.
    pub fn from_triplets<I>(num_users: usize, num_items: usize, triplets: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        if num_users == 0 || num_items == 0 {
            return Err(Error::arg("rating matrix needs at least one user and one item"));
        }
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); num_users];
        for (u, j, r) in triplets {
            check_index("user", u, num_users)?;
            check_index("item", j, num_items)?;
            if !r.is_finite() || r < 0.0 {
                return Err(Error::arg(format!(
                    "rating for (user {u}, item {j}) must be finite and nonnegative, got {r}"
                )));
            }
            rows[u].push((j, r));
        }
        for row in &mut rows {
            // stable sort keeps insertion order within an item, so the last
            // occurrence is the one retained
            row.sort_by_key(|&(j, _)| j);
            let mut dedup: Vec<(usize, f64)> = Vec::with_capacity(row.len());
            for &(j, r) in row.iter() {
                match dedup.last_mut() {
                    Some(last) if last.0 == j => last.1 = r,
                    _ => dedup.push((j, r)),
                }
            }
            dedup.retain(|&(_, r)| r > 0.0);
            *row = dedup;
        }
        Ok(Self {
            num_users,
            num_items,
            rows,
        })
    }

    /// Dense row-major constructor, mostly for small hand-written instances.
    pub fn from_dense(rows: &[Vec<f64>]) -> Result<Self> {
        let num_users = rows.len();
        let num_items = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != num_items) {
            return Err(Error::arg("ragged dense rating matrix"));
        }
        let triplets = rows.iter().enumerate().flat_map(|(u, row)| {
            row.iter().enumerate().map(move |(j, &r)| (u, j, r))
        });
        Self::from_triplets(num_users, num_items, triplets)
    }

    pub fn num_users(&self) -> usize {
        self.num_users
    }

    pub fn num_items(&self) -> usize {
        self.num_items
    }

    /// Nonzero entries of one user's row, sorted by item.
    pub fn row(&self, user: usize) -> &[(usize, f64)] {
        &self.rows[user]
    }

    pub fn get(&self, user: usize, item: usize) -> f64 {
        let row = &self.rows[user];
        row.binary_search_by_key(&item, |&(j, _)| j)
            .map_or(0.0, |pos| row[pos].1)
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn density(&self) -> f64 {
        self.nnz() as f64 / (self.num_users as f64 * self.num_items as f64)
    }

    /// `max_{j∈S} r[user, j]`, zero for the empty set.
    pub fn facility_location(&self, set: &[usize], user: usize) -> Result<f64> {
        check_index("user", user, self.num_users)?;
        let mut best = 0.0f64;
        for &j in set {
            check_index("item", j, self.num_items)?;
            best = best.max(self.get(user, j));
        }
        Ok(best)
    }

    /// `(Σ_{j∈S} r[user, j])^{1/2}`, zero for the empty set.
    pub fn concave_over_modular(&self, set: &[usize], user: usize) -> Result<f64> {
        check_index("user", user, self.num_users)?;
        let mut total = 0.0;
        for &j in set {
            check_index("item", j, self.num_items)?;
            total += self.get(user, j);
        }
        Ok(total.sqrt())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObjectiveKind {
    FacilityLocation,
    ConcaveOverModular,
    ExplicitTable,
}

impl ObjectiveKind {
    pub fn name(self) -> &'static str {
        match self {
            ObjectiveKind::FacilityLocation => "facility-location",
            ObjectiveKind::ConcaveOverModular => "concave-over-modular",
            ObjectiveKind::ExplicitTable => "explicit-table",
        }
    }
}

impl std::str::FromStr for ObjectiveKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "facility-location" => Ok(ObjectiveKind::FacilityLocation),
            "concave-over-modular" => Ok(ObjectiveKind::ConcaveOverModular),
            "explicit-table" => Ok(ObjectiveKind::ExplicitTable),
            other => Err(Error::arg(format!("unknown objective kind {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Body {
    Ratings(RatingMatrix),
    // one 2^n table per scenario, indexed by bitmask (bit i = item i)
    Tables(Vec<Vec<f64>>),
}

/// A stochastic set function with a uniform empirical scenario distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct SetObjective {
    ground: GroundSet,
    kind: ObjectiveKind,
    body: Body,
}

impl SetObjective {
    /// `f(S, u) = max_{j∈S} r[u, j]`, one scenario per user.
    pub fn facility_location(matrix: RatingMatrix) -> Self {
        Self {
            ground: GroundSet::new(matrix.num_items()).expect("matrix has items"),
            kind: ObjectiveKind::FacilityLocation,
            body: Body::Ratings(matrix),
        }
    }

    /// `f(S, u) = (Σ_{j∈S} r[u, j])^{1/2}`, one scenario per user.
    pub fn concave_over_modular(matrix: RatingMatrix) -> Self {
        Self {
            ground: GroundSet::new(matrix.num_items()).expect("matrix has items"),
            kind: ObjectiveKind::ConcaveOverModular,
            body: Body::Ratings(matrix),
        }
    }

    pub fn from_ratings(kind: ObjectiveKind, matrix: RatingMatrix) -> Result<Self> {
        match kind {
            ObjectiveKind::FacilityLocation => Ok(Self::facility_location(matrix)),
            ObjectiveKind::ConcaveOverModular => Ok(Self::concave_over_modular(matrix)),
            ObjectiveKind::ExplicitTable => Err(Error::arg(
                "explicit-table objectives are built from value tables, not ratings",
            )),
        }
    }

    /// A deterministic set function given by its full value table.
    pub fn explicit_table(n: usize, values: Vec<f64>) -> Result<Self> {
        Self::explicit_scenarios(n, vec![values])
    }

    /// One value table per scenario; scenarios are drawn uniformly.
    pub fn explicit_scenarios(n: usize, tables: Vec<Vec<f64>>) -> Result<Self> {
        let ground = GroundSet::new(n)?;
        if n > MAX_EXACT_N {
            return Err(Error::capability(format!(
                "explicit tables are limited to n <= {MAX_EXACT_N}, got {n}"
            )));
        }
        if tables.is_empty() {
            return Err(Error::arg("explicit objective needs at least one scenario"));
        }
        for t in &tables {
            if t.len() != 1 << n {
                return Err(Error::DimensionMismatch {
                    expected: 1 << n,
                    got: t.len(),
                });
            }
            if let Some(v) = t.iter().find(|v| !v.is_finite() || **v < 0.0) {
                return Err(Error::arg(format!(
                    "set function values must be finite and nonnegative, got {v}"
                )));
            }
        }
        Ok(Self {
            ground,
            kind: ObjectiveKind::ExplicitTable,
            body: Body::Tables(tables),
        })
    }

    /// Modular function `f(S) = Σ_{j∈S} w_j` as an explicit table.
    pub fn modular(weights: &[f64]) -> Result<Self> {
        let n = weights.len();
        if n > MAX_EXACT_N {
            return Err(Error::capability(format!(
                "explicit tables are limited to n <= {MAX_EXACT_N}, got {n}"
            )));
        }
        let table = (0..1usize << n)
            .map(|mask| (0..n).filter(|i| mask >> i & 1 == 1).map(|i| weights[i]).sum())
            .collect();
        Self::explicit_table(n, table)
    }

    /// Parses the explicit-table text format: a first line holding `n`,
    /// then `2^n` lines `bitmask value` (bit `i` set ⇔ item `i` in the set),
    /// each mask exactly once. Blank lines and `#` comments are ignored.
    pub fn parse_explicit_table(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(no, l)| (no + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty());
        let (_, first) = lines.next().ok_or_else(|| Error::arg("empty explicit table"))?;
        let n: usize = first
            .parse()
            .map_err(|_| Error::arg(format!("first line must be n, got {first:?}")))?;
        if n == 0 || n > MAX_EXACT_N {
            return Err(Error::capability(format!(
                "explicit tables need 1 <= n <= {MAX_EXACT_N}, got {n}"
            )));
        }
        let mut values = vec![f64::NAN; 1 << n];
        for (no, line) in lines {
            let bad = || Error::arg(format!("line {no}: expected `bitmask value`, got {line:?}"));
            let mut parts = line.split_whitespace();
            let mask: usize = parts.next().and_then(|m| m.parse().ok()).ok_or_else(bad)?;
            let value: f64 = parts.next().and_then(|v| v.parse().ok()).ok_or_else(bad)?;
            if parts.next().is_some() {
                return Err(bad());
            }
            check_index("bitmask", mask, 1 << n)?;
            if !values[mask].is_nan() {
                return Err(Error::arg(format!("line {no}: bitmask {mask} given twice")));
            }
            values[mask] = value;
        }
        if let Some(missing) = values.iter().position(|v| v.is_nan()) {
            return Err(Error::arg(format!("bitmask {missing} has no value")));
        }
        Self::explicit_table(n, values)
    }

    pub fn kind(&self) -> ObjectiveKind {
        self.kind
    }

    pub fn ground(&self) -> &GroundSet {
        &self.ground
    }

    pub fn n(&self) -> usize {
        self.ground.len()
    }

    pub fn scenario_count(&self) -> usize {
        match &self.body {
            Body::Ratings(m) => m.num_users(),
            Body::Tables(t) => t.len(),
        }
    }

    pub fn ratings(&self) -> Option<&RatingMatrix> {
        match &self.body {
            Body::Ratings(m) => Some(m),
            Body::Tables(_) => None,
        }
    }

    /// `f(S, z)` for one scenario.
    pub fn eval_scenario(&self, set: &[usize], scenario: usize) -> Result<f64> {
        check_index("scenario", scenario, self.scenario_count())?;
        match (&self.body, self.kind) {
            (Body::Ratings(m), ObjectiveKind::FacilityLocation) => m.facility_location(set, scenario),
            (Body::Ratings(m), _) => m.concave_over_modular(set, scenario),
            (Body::Tables(t), _) => Ok(t[scenario][self.mask_of(set)?]),
        }
    }

    /// Exact average of `f(S, z)` over all scenarios.
    pub fn expected_value(&self, set: &[usize]) -> Result<f64> {
        let total: f64 = (0..self.scenario_count())
            .map(|z| self.eval_scenario(set, z))
            .sum::<Result<f64>>()?;
        Ok(total / self.scenario_count() as f64)
    }

    /// Expected value of every subset, indexed by bitmask.
    pub fn value_table(&self) -> Result<Vec<f64>> {
        let n = self.n();
        if n > MAX_EXACT_N {
            return Err(Error::capability(format!(
                "exact enumeration needs n <= {MAX_EXACT_N} (got {n}); use the stochastic gradient estimator"
            )));
        }
        if let Body::Tables(tables) = &self.body {
            let scale = 1.0 / tables.len() as f64;
            let mut out = vec![0.0; 1 << n];
            for t in tables {
                for (o, v) in out.iter_mut().zip(t) {
                    *o += v;
                }
            }
            out.iter_mut().for_each(|v| *v *= scale);
            return Ok(out);
        }
        let mut set = Vec::with_capacity(n);
        (0..1usize << n)
            .map(|mask| {
                set.clear();
                set.extend((0..n).filter(|i| mask >> i & 1 == 1));
                self.expected_value(&set)
            })
            .collect()
    }

    /// `m_f = max_i f({i})`.
    pub fn max_singleton(&self) -> Result<f64> {
        (0..self.n())
            .map(|i| self.expected_value(&[i]))
            .try_fold(0.0f64, |acc, v| Ok(acc.max(v?)))
    }

    /// `√n · max_j E[f({j}, z)²]^{1/2}`, an upper bound on the standard
    /// deviation of the single-sample gradient estimator.
    pub fn sigma_upper_bound(&self) -> Result<f64> {
        let n = self.n();
        let nz = self.scenario_count() as f64;
        let mut best = 0.0f64;
        for j in 0..n {
            let mut second_moment = 0.0;
            for z in 0..self.scenario_count() {
                let v = self.eval_scenario(&[j], z)?;
                second_moment += v * v;
            }
            best = best.max((second_moment / nz).sqrt());
        }
        Ok((n as f64).sqrt() * best)
    }

    /// Unbiased estimate of `∇F(x)` averaged over `batch` independent draws.
    ///
    /// Each draw picks a scenario `z` uniformly and one set `S` containing each
    /// item `i` independently with probability `x_i`; coordinate `i` is then
    /// `f(S ∪ {i}, z) − f(S \ {i}, z)`. One draw costs `n` scenario
    /// evaluations.
    pub fn stochastic_gradient<R: Rng + ?Sized>(
        &self,
        x: &ContinuousPoint,
        batch: usize,
        rng: &mut R,
    ) -> Result<GradientVector> {
        let n = self.n();
        check_dim(n, x.len())?;
        if batch == 0 {
            return Err(Error::arg("mini-batch size must be at least 1"));
        }
        let mut grad = vec![0.0; n];
        let mut member = vec![false; n];
        for _ in 0..batch {
            let z = rng.gen_range(0..self.scenario_count());
            for (m, &p) in member.iter_mut().zip(x.as_slice()) {
                *m = rng.gen::<f64>() < p;
            }
            self.accumulate_marginals(z, &member, &mut grad);
        }
        let scale = 1.0 / batch as f64;
        grad.iter_mut().for_each(|g| *g *= scale);
        Ok(GradientVector(grad))
    }

    /// Adds `f(S ∪ {i}, z) − f(S \ {i}, z)` for every `i` into `out`.
    pub(crate) fn accumulate_marginals(&self, z: usize, member: &[bool], out: &mut [f64]) {
        match (&self.body, self.kind) {
            (Body::Ratings(m), ObjectiveKind::FacilityLocation) => {
                let row = m.row(z);
                // only rated items can change the max; zero-rated items give 0
                let (mut top, mut top_item, mut second) = (0.0f64, usize::MAX, 0.0f64);
                for &(j, r) in row.iter().filter(|(j, _)| member[*j]) {
                    if r > top {
                        second = top;
                        top = r;
                        top_item = j;
                    } else if r > second {
                        second = r;
                    }
                }
                for &(j, r) in row {
                    out[j] += if member[j] {
                        if j == top_item {
                            top - second
                        } else {
                            0.0
                        }
                    } else {
                        (r - top).max(0.0)
                    };
                }
            }
            (Body::Ratings(m), _) => {
                let row = m.row(z);
                let total: f64 = row.iter().filter(|(j, _)| member[*j]).map(|e| e.1).sum();
                let root = total.sqrt();
                for &(j, r) in row {
                    out[j] += if member[j] {
                        let rest = (total - r).max(0.0);
                        r / (root + rest.sqrt())
                    } else {
                        r / ((total + r).sqrt() + root)
                    };
                }
            }
            (Body::Tables(tables), _) => {
                let t = &tables[z];
                let mask = member
                    .iter()
                    .enumerate()
                    .fold(0usize, |acc, (i, &b)| acc | (usize::from(b) << i));
                for (i, o) in out.iter_mut().enumerate() {
                    let bit = 1usize << i;
                    *o += t[mask | bit] - t[mask & !bit];
                }
            }
        }
    }

    /// Exact value of the multilinear extension where a closed form or
    /// enumeration is available: facility location at any `n` (expected max
    /// under independent inclusion), any kind for `n <= MAX_EXACT_N`.
    pub fn multilinear_value(&self, x: &ContinuousPoint) -> Result<f64> {
        check_dim(self.n(), x.len())?;
        match (&self.body, self.kind) {
            (Body::Ratings(m), ObjectiveKind::FacilityLocation) => {
                let xs = x.as_slice();
                let mut total = 0.0;
                let mut sorted = Vec::new();
                for u in 0..m.num_users() {
                    sorted.clear();
                    sorted.extend_from_slice(m.row(u));
                    sorted.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
                    let mut none_yet = 1.0;
                    for &(j, r) in &sorted {
                        total += r * xs[j] * none_yet;
                        none_yet *= 1.0 - xs[j];
                    }
                }
                Ok(total / m.num_users() as f64)
            }
            _ => MultilinearOracle::new(self)?.value(x),
        }
    }

    fn mask_of(&self, set: &[usize]) -> Result<usize> {
        let n = self.n();
        set.iter().try_fold(0usize, |acc, &i| {
            check_index("item", i, n)?;
            Ok(acc | 1 << i)
        })
    }
}

/// Exact multilinear extension of a small set function, backed by the full
/// table of expected values.
#[derive(Debug, Clone)]
pub struct MultilinearOracle {
    n: usize,
    table: Vec<f64>,
}

impl MultilinearOracle {
    pub fn new(f: &SetObjective) -> Result<Self> {
        Ok(Self {
            n: f.n(),
            table: f.value_table()?,
        })
    }

    pub fn from_table(n: usize, table: Vec<f64>) -> Result<Self> {
        if n > MAX_EXACT_N {
            return Err(Error::capability(format!("exact oracle needs n <= {MAX_EXACT_N}")));
        }
        check_dim(1 << n, table.len())?;
        Ok(Self { n, table })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn table(&self) -> &[f64] {
        &self.table
    }

    pub fn value(&self, x: &ContinuousPoint) -> Result<f64> {
        let w = self.weights(x)?;
        Ok(w.iter().zip(&self.table).map(|(w, f)| w * f).sum())
    }

    /// `∂F/∂x_j = F(x; x_j←1) − F(x; x_j←0)`, accumulated from one weight
    /// table: pairing `S` with `S ∪ {j}` collapses the two weights into the
    /// weight of `S` under `x` with coordinate `j` marginalized out.
    pub fn gradient(&self, x: &ContinuousPoint) -> Result<GradientVector> {
        let w = self.weights(x)?;
        let t = &self.table;
        let grad = (0..self.n)
            .map(|j| {
                let bit = 1usize << j;
                (0..t.len())
                    .filter(|mask| mask & bit == 0)
                    .map(|mask| (w[mask] + w[mask | bit]) * (t[mask | bit] - t[mask]))
                    .sum()
            })
            .collect();
        Ok(GradientVector(grad))
    }

    fn weights(&self, x: &ContinuousPoint) -> Result<Vec<f64>> {
        check_dim(self.n, x.len())?;
        let mut w = vec![0.0; 1 << self.n];
        w[0] = 1.0;
        for (i, &p) in x.as_slice().iter().enumerate() {
            let half = 1usize << i;
            for mask in 0..half {
                let base = w[mask];
                w[mask | half] = base * p;
                w[mask] = base * (1.0 - p);
            }
        }
        Ok(w)
    }
}

/// `F(x)` by `2^n` enumeration.
pub fn exact_multilinear(f: &SetObjective, x: &ContinuousPoint) -> Result<f64> {
    check_dim(f.n(), x.len())?;
    MultilinearOracle::new(f)?.value(x)
}

/// `∇F(x)` by `2^n` enumeration.
pub fn exact_multilinear_grad(f: &SetObjective, x: &ContinuousPoint) -> Result<GradientVector> {
    check_dim(f.n(), x.len())?;
    MultilinearOracle::new(f)?.gradient(x)
}

/// A point of `[0, 1]^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuousPoint(Vec<f64>);

impl ContinuousPoint {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if let Some((i, v)) = coords
            .iter()
            .enumerate()
            .find(|(_, v)| !(0.0..=1.0).contains(*v))
        {
            return Err(Error::arg(format!("coordinate {i} = {v} is outside [0, 1]")));
        }
        Ok(Self(coords))
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn ones(n: usize) -> Self {
        Self(vec![1.0; n])
    }

    pub fn filled(n: usize, value: f64) -> Result<Self> {
        Self::new(vec![value; n])
    }

    /// Indicator vector of `set`.
    pub fn indicator(n: usize, set: &[usize]) -> Result<Self> {
        let mut coords = vec![0.0; n];
        for &i in set {
            check_index("item", i, n)?;
            coords[i] = 1.0;
        }
        Ok(Self(coords))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// Copy with coordinate `i` replaced.
    pub fn with_coord(&self, i: usize, value: f64) -> Result<Self> {
        check_index("coordinate", i, self.len())?;
        let mut c = self.0.clone();
        c[i] = value;
        Self::new(c)
    }

    pub fn support_size(&self) -> usize {
        self.0.iter().filter(|v| **v != 0.0).count()
    }
}

/// A gradient or gradient estimate; finite entries of any sign.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientVector(Vec<f64>);

impl GradientVector {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.iter().any(|v| !v.is_finite()) {
            return Err(Error::arg("gradient entries must be finite"));
        }
        Ok(Self(coords))
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// `‖self − other‖²`.
    pub fn sq_dist(&self, other: &GradientVector) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    }
}

pub(crate) fn check_index(what: &'static str, index: usize, len: usize) -> Result<()> {
    if index >= len {
        return Err(Error::OutOfRange { what, index, len });
    }
    Ok(())
}

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

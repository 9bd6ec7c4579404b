//! Rating ingestion and synthetic instance generation.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use log::warn;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use scg_core::RatingMatrix;

use crate::error::{BenchError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RatingsFormat {
    /// `user item rating`, whitespace separated.
    TripletTsv,
    /// `user::item::rating::timestamp`.
    MovielensDat,
}

impl RatingsFormat {
    /// `.dat` files are MovieLens, anything else is read as triplets.
    pub fn guess(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("dat") => Self::MovielensDat,
            _ => Self::TripletTsv,
        }
    }
}

pub fn load_ratings(path: &Path, format: RatingsFormat) -> Result<RatingMatrix> {
    let text = fs::read_to_string(path).map_err(|e| BenchError::io(path, e))?;
    parse_ratings(&text, format, &path.display().to_string())
}

/// Parses ratings text. Raw user and item ids are remapped to dense indices
/// in increasing id order, so 0-based and 1-based files both work.
pub fn parse_ratings(text: &str, format: RatingsFormat, origin: &str) -> Result<RatingMatrix> {
    let err = |line: usize, message: String| BenchError::Ingest {
        path: origin.to_string(),
        line,
        message,
    };
    let mut cells: BTreeMap<(u64, u64), (f64, usize)> = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = match format {
            RatingsFormat::TripletTsv => line.split_whitespace().collect(),
            RatingsFormat::MovielensDat => line.split("::").map(str::trim).collect(),
        };
        let expected = match format {
            RatingsFormat::TripletTsv => 3,
            RatingsFormat::MovielensDat => 4,
        };
        if fields.len() != expected {
            return Err(err(
                line_no,
                format!("expected {expected} fields, found {}", fields.len()),
            ));
        }
        let user: u64 = fields[0]
            .parse()
            .map_err(|_| err(line_no, format!("bad user id {:?}", fields[0])))?;
        let item: u64 = fields[1]
            .parse()
            .map_err(|_| err(line_no, format!("bad item id {:?}", fields[1])))?;
        let rating: f64 = fields[2]
            .parse()
            .map_err(|_| err(line_no, format!("bad rating {:?}", fields[2])))?;
        if !rating.is_finite() {
            return Err(err(line_no, format!("non-finite rating {rating}")));
        }
        if rating < 0.0 {
            return Err(err(line_no, format!("negative rating {rating}")));
        }
        if let Some((_, first)) = cells.insert((user, item), (rating, line_no)) {
            warn!("{origin}:{line_no}: duplicate rating for user {user}, item {item} (first on line {first}); keeping the last");
        }
    }
    if cells.is_empty() {
        return Err(err(0, "no ratings found".into()));
    }
    let users: BTreeSet<u64> = cells.keys().map(|k| k.0).collect();
    let items: BTreeSet<u64> = cells.keys().map(|k| k.1).collect();
    let user_idx: BTreeMap<u64, usize> = users.iter().enumerate().map(|(i, &u)| (u, i)).collect();
    let item_idx: BTreeMap<u64, usize> = items.iter().enumerate().map(|(i, &u)| (u, i)).collect();
    let triplets = cells
        .iter()
        .map(|(&(u, i), &(r, _))| (user_idx[&u], item_idx[&i], r));
    Ok(RatingMatrix::from_triplets(users.len(), items.len(), triplets)?)
}

/// Parameters of a synthetic rating matrix, written `synthetic:UxI:density:rating_max:seed`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticSpec {
    pub num_users: usize,
    pub num_items: usize,
    pub density: f64,
    pub rating_max: u32,
    pub seed: u64,
}

impl FromStr for SyntheticSpec {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || {
            BenchError::Invalid(format!(
                "synthetic spec {s:?} must look like synthetic:USERSxITEMS:DENSITY:RATING_MAX:SEED"
            ))
        };
        let body = s.strip_prefix("synthetic:").ok_or_else(bad)?;
        let parts: Vec<&str> = body.split(':').collect();
        if parts.len() != 4 {
            return Err(bad());
        }
        let (u, i) = parts[0].split_once('x').ok_or_else(bad)?;
        let spec = Self {
            num_users: u.trim().parse().map_err(|_| bad())?,
            num_items: i.trim().parse().map_err(|_| bad())?,
            density: parts[1].trim().parse().map_err(|_| bad())?,
            rating_max: parts[2].trim().parse().map_err(|_| bad())?,
            seed: parts[3].trim().parse().map_err(|_| bad())?,
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl fmt::Display for SyntheticSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "synthetic:{}x{}:{}:{}:{}",
            self.num_users, self.num_items, self.density, self.rating_max, self.seed
        )
    }
}

impl SyntheticSpec {
    fn validate(&self) -> Result<()> {
        if self.num_users == 0 || self.num_items == 0 {
            return Err(BenchError::Invalid("synthetic instance needs users and items".into()));
        }
        if !(self.density > 0.0 && self.density <= 1.0) {
            return Err(BenchError::Invalid(format!(
                "density must lie in (0, 1], got {}",
                self.density
            )));
        }
        if self.rating_max == 0 {
            return Err(BenchError::Invalid("rating_max must be at least 1".into()));
        }
        Ok(())
    }

    pub fn generate(&self) -> Result<RatingMatrix> {
        gen_synthetic(self.num_users, self.num_items, self.density, self.rating_max, self.seed)
    }
}

/// Each cell is rated independently with probability `density`, uniformly
/// on `1..=rating_max`.
pub fn gen_synthetic(
    num_users: usize,
    num_items: usize,
    density: f64,
    rating_max: u32,
    seed: u64,
) -> Result<RatingMatrix> {
    SyntheticSpec {
        num_users,
        num_items,
        density,
        rating_max,
        seed,
    }
    .validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut triplets = Vec::new();
    for u in 0..num_users {
        for i in 0..num_items {
            // draw both values unconditionally so the stream layout does not depend on density
            let present = rng.gen::<f64>() < density;
            let rating = rng.gen_range(1..=rating_max);
            if present {
                triplets.push((u, i, f64::from(rating)));
            }
        }
    }
    Ok(RatingMatrix::from_triplets(num_users, num_items, triplets)?)
}

/// Writes nonzero ratings as `user\titem\trating` lines.
pub fn write_triplets<W: Write>(m: &RatingMatrix, mut out: W) -> std::io::Result<()> {
    for u in 0..m.num_users() {
        for (i, r) in m.row(u) {
            writeln!(out, "{u}\t{i}\t{r}")?;
        }
    }
    Ok(())
}

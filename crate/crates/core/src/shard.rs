//! Sharded screening: per-shard summaries and the three aggregation schemes.
//!
//! * SAPS averages the per-shard partial correlations.
//! * ACPS averages the nine raw moments across shards and evaluates the
//!   partial correlation once on the pooled moments.
//! * JDPS averages jackknife-debiased per-shard partial correlations.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::data::{DataBlock, Dataset};
use crate::error::{Error, Result};
use crate::moments::{
    partial_correlation, CompensatedSum, MomentSums, MomentVector, ResponseSums, MIN_SAMPLES,
};

/// Distributed estimator of the partial-correlation utility.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Saps,
    Acps,
    Jdps,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Saps, Method::Acps, Method::Jdps];

    /// Smallest shard that supports the method.
    pub fn min_shard_rows(self) -> usize {
        match self {
            Method::Jdps => MIN_SAMPLES + 1,
            _ => MIN_SAMPLES,
        }
    }

    fn code(self) -> u8 {
        match self {
            Method::Saps => 0,
            Method::Acps => 1,
            Method::Jdps => 2,
        }
    }

    fn from_code(code: u8) -> Option<Method> {
        match code {
            0 => Some(Method::Saps),
            1 => Some(Method::Acps),
            2 => Some(Method::Jdps),
            _ => None,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Saps => "SAPS",
            Method::Acps => "ACPS",
            Method::Jdps => "JDPS",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "saps" => Ok(Method::Saps),
            "acps" => Ok(Method::Acps),
            "jdps" => Ok(Method::Jdps),
            other => Err(Error::Config(format!("unknown method `{other}`"))),
        }
    }
}

/// A dataset split into `K` disjoint row blocks with a common column layout.
#[derive(Debug, Clone)]
pub struct ShardedDataset {
    shards: Vec<DataBlock>,
    feature_names: Vec<String>,
}

impl ShardedDataset {
    pub fn from_shards(shards: Vec<DataBlock>, feature_names: Vec<String>) -> Result<Self> {
        if shards.is_empty() {
            return Err(Error::Config("at least one shard is required".into()));
        }
        let p = feature_names.len();
        if shards.iter().any(|s| s.nfeatures() != p) {
            return Err(Error::ShapeMismatch(
                "all shards must carry the same feature columns".into(),
            ));
        }
        if let Some(s) = shards.iter().find(|s| s.nrows() < MIN_SAMPLES) {
            return Err(Error::InsufficientSamples {
                needed: MIN_SAMPLES,
                got: s.nrows(),
            });
        }
        Ok(ShardedDataset {
            shards,
            feature_names,
        })
    }

    pub fn shards(&self) -> &[DataBlock] {
        &self.shards
    }

    pub fn num_shards(&self) -> usize {
        self.shards.len()
    }

    pub fn nfeatures(&self) -> usize {
        self.feature_names.len()
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn total_rows(&self) -> usize {
        self.shards.iter().map(DataBlock::nrows).sum()
    }

    pub fn shard_sizes(&self) -> Vec<usize> {
        self.shards.iter().map(DataBlock::nrows).collect()
    }
}

/// Row order used before splitting into shards.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shuffle {
    Off,
    Seeded(u64),
}

/// Row counts of `k` shards over `n` rows: the first `n mod k` shards get one extra row.
pub fn shard_sizes(n: usize, k: usize) -> Vec<usize> {
    let (base, extra) = (n / k, n % k);
    (0..k).map(|i| base + usize::from(i < extra)).collect()
}

/// Split a dataset into `k` disjoint shards covering every row.
pub fn shard_dataset(data: &Dataset, k: usize, shuffle: Shuffle) -> Result<ShardedDataset> {
    let n = data.block.nrows();
    if k == 0 {
        return Err(Error::Config("shard count must be positive".into()));
    }
    if n < MIN_SAMPLES * k {
        return Err(Error::TooManyShards {
            shards: k,
            needed: MIN_SAMPLES * k,
            rows: n,
        });
    }
    let sizes = shard_sizes(n, k);
    let shards = match shuffle {
        Shuffle::Off => {
            let mut start = 0;
            sizes
                .iter()
                .map(|&len| {
                    let block = data.block.rows(start..start + len);
                    start += len;
                    block
                })
                .collect()
        }
        Shuffle::Seeded(seed) => {
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            let mut start = 0;
            sizes
                .iter()
                .map(|&len| {
                    let block = data.block.take_rows(&order[start..start + len]);
                    start += len;
                    block
                })
                .collect()
        }
    };
    ShardedDataset::from_shards(shards, data.feature_names.clone())
}

/// Local partial correlation and its jackknife bias estimate on one shard.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JackknifeEstimate {
    pub rho: f64,
    pub delta: f64,
}

impl JackknifeEstimate {
    pub fn debiased(&self) -> f64 {
        self.rho - self.delta
    }
}

/// Per-feature payload of a shard summary; `None` marks a feature that was
/// numerically degenerate on this shard.
#[derive(Debug, Clone, PartialEq)]
pub enum ShardPayload {
    Saps(Vec<Option<f64>>),
    Acps(Vec<MomentVector>),
    Jdps(Vec<Option<JackknifeEstimate>>),
}

/// What one shard sends to the aggregator.
#[derive(Debug, Clone, PartialEq)]
pub struct ShardSummary {
    pub payload: ShardPayload,
    pub shard_size: usize,
}

impl ShardSummary {
    pub fn method(&self) -> Method {
        match self.payload {
            ShardPayload::Saps(_) => Method::Saps,
            ShardPayload::Acps(_) => Method::Acps,
            ShardPayload::Jdps(_) => Method::Jdps,
        }
    }

    pub fn nfeatures(&self) -> usize {
        match &self.payload {
            ShardPayload::Saps(v) => v.len(),
            ShardPayload::Acps(v) => v.len(),
            ShardPayload::Jdps(v) => v.len(),
        }
    }
}

/// Jackknife bias estimate `(n−1)/n · Σᵢ ρ₋ᵢ − (n−1)·ρ` using O(1) moment
/// downdates per left-out row.
fn jackknife(sums: &MomentSums, y: &[f64], x: &[f64], z: &[f64]) -> Result<JackknifeEstimate> {
    let rho = partial_correlation(&sums.to_moments())?;
    let n = y.len() as f64;
    let mut loo = CompensatedSum::default();
    for i in 0..y.len() {
        loo.add(partial_correlation(&sums.without_row(y[i], x[i], z[i]))?);
    }
    let delta = (n - 1.0) / n * loo.value() - (n - 1.0) * rho;
    Ok(JackknifeEstimate { rho, delta })
}

/// Compute one shard's screening payload.
pub fn summarize_shard(shard: &DataBlock, method: Method) -> Result<ShardSummary> {
    let n = shard.nrows();
    if n < method.min_shard_rows() {
        return Err(Error::InsufficientSamples {
            needed: method.min_shard_rows(),
            got: n,
        });
    }
    let (y, z) = (shard.response(), shard.conditional());
    let shared = ResponseSums::accumulate(y, z);
    let sums = |x: &[f64]| MomentSums::accumulate(shared, y, x, z);
    let features = shard.features();
    let payload = match method {
        Method::Saps => ShardPayload::Saps(
            features
                .par_iter()
                .map(|x| partial_correlation(&sums(x).to_moments()).ok())
                .collect(),
        ),
        Method::Acps => ShardPayload::Acps(
            features
                .par_iter()
                .map(|x| sums(x).to_moments())
                .collect(),
        ),
        Method::Jdps => ShardPayload::Jdps(
            features
                .par_iter()
                .map(|x| jackknife(&sums(x), y, x, z).ok())
                .collect(),
        ),
    };
    Ok(ShardSummary {
        payload,
        shard_size: n,
    })
}

/// Summaries for every shard, in shard order.
pub fn summarize_all(data: &ShardedDataset, method: Method) -> Result<Vec<ShardSummary>> {
    data.shards()
        .par_iter()
        .enumerate()
        .map(|(k, shard)| summarize_shard(shard, method).map_err(|e| e.in_shard(k)))
        .collect()
}

/// Per-feature utilities `ω̂_j ≥ 0`. Features for which no shard produced a
/// usable estimate get utility 0 and are flagged unreliable.
#[derive(Debug, Clone, PartialEq)]
pub struct Utilities {
    pub values: Vec<f64>,
    pub unreliable: Vec<bool>,
}

impl Utilities {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

fn check_summaries(summaries: &[ShardSummary], method: Method) -> Result<usize> {
    let first = summaries
        .first()
        .ok_or_else(|| Error::Config("no shard summaries to aggregate".into()))?;
    let p = first.nfeatures();
    if summaries
        .iter()
        .any(|s| s.method() != method || s.nfeatures() != p)
    {
        return Err(Error::MethodMismatch);
    }
    Ok(p)
}

/// Absolute mean over shards of per-shard estimates, skipping degenerate entries.
fn average_estimates<F>(summaries: &[ShardSummary], p: usize, estimate: F) -> Utilities
where
    F: Fn(&ShardSummary, usize) -> Option<f64>,
{
    let mut values = vec![0.0; p];
    let mut unreliable = vec![false; p];
    for j in 0..p {
        let mut sum = CompensatedSum::default();
        let mut used = 0usize;
        for s in summaries {
            if let Some(v) = estimate(s, j) {
                sum.add(v);
                used += 1;
            }
        }
        if used == 0 {
            unreliable[j] = true;
        } else {
            values[j] = (sum.value() / used as f64).abs();
        }
    }
    Utilities { values, unreliable }
}

/// SAPS: `|mean_k ρ̂_{k,j}|`.
pub fn aggregate_saps(summaries: &[ShardSummary]) -> Result<Utilities> {
    let p = check_summaries(summaries, Method::Saps)?;
    Ok(average_estimates(summaries, p, |s, j| match &s.payload {
        ShardPayload::Saps(v) => v[j],
        _ => unreachable!("checked above"),
    }))
}

/// JDPS: `|mean_k (ρ̂_{k,j} − Δ̂_{k,j})|`.
pub fn aggregate_jdps(summaries: &[ShardSummary]) -> Result<Utilities> {
    let p = check_summaries(summaries, Method::Jdps)?;
    Ok(average_estimates(summaries, p, |s, j| match &s.payload {
        ShardPayload::Jdps(v) => v[j].map(|e| e.debiased()),
        _ => unreachable!("checked above"),
    }))
}

/// Count-weighted average of moment vectors from several shards.
pub fn pool_moments(parts: &[MomentVector]) -> Result<MomentVector> {
    let mut total: u64 = 0;
    let mut acc = [CompensatedSum::default(); 9];
    for m in parts {
        total = total.checked_add(m.count).ok_or(Error::CountOverflow)?;
        let w = m.count as f64;
        for (a, t) in acc.iter_mut().zip(m.to_array()) {
            a.add(w * t);
        }
    }
    if total == 0 {
        return Err(Error::InsufficientSamples { needed: 1, got: 0 });
    }
    Ok(MomentVector::from_array(
        acc.map(|a| a.value() / total as f64),
        total,
    ))
}

/// ACPS: `|g(θ̄_j)|` with `θ̄_j` the pooled moments.
pub fn aggregate_acps(summaries: &[ShardSummary]) -> Result<Utilities> {
    let p = check_summaries(summaries, Method::Acps)?;
    let mut values = vec![0.0; p];
    let mut unreliable = vec![false; p];
    let mut parts = Vec::with_capacity(summaries.len());
    for j in 0..p {
        parts.clear();
        parts.extend(summaries.iter().map(|s| match &s.payload {
            ShardPayload::Acps(v) => v[j],
            _ => unreachable!("checked above"),
        }));
        match partial_correlation(&pool_moments(&parts)?) {
            Ok(r) => values[j] = r.abs(),
            Err(_) => unreliable[j] = true,
        }
    }
    Ok(Utilities { values, unreliable })
}

pub fn aggregate(method: Method, summaries: &[ShardSummary]) -> Result<Utilities> {
    match method {
        Method::Saps => aggregate_saps(summaries),
        Method::Acps => aggregate_acps(summaries),
        Method::Jdps => aggregate_jdps(summaries),
    }
}

/// Summarize every shard and aggregate with the given method.
pub fn screen(data: &ShardedDataset, method: Method) -> Result<Utilities> {
    aggregate(method, &summarize_all(data, method)?)
}

/// How the retained set is cut from the ranking.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SelectionRule {
    Threshold(f64),
    TopD(usize),
}

impl SelectionRule {
    /// Hard-threshold model size `⌊n / ln n⌋`.
    pub fn default_top_d(n: usize) -> usize {
        let nf = n as f64;
        ((nf / nf.ln()).floor() as usize).max(1)
    }
}

impl FromStr for SelectionRule {
    type Err = Error;

    /// `topd:<d>` or `gamma:<γ>`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidRule(format!("cannot parse rule `{s}`"));
        let (kind, value) = s.split_once(':').ok_or_else(bad)?;
        match kind.to_ascii_lowercase().as_str() {
            "topd" => Ok(SelectionRule::TopD(value.parse().map_err(|_| bad())?)),
            "gamma" => Ok(SelectionRule::Threshold(value.parse().map_err(|_| bad())?)),
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for SelectionRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SelectionRule::Threshold(g) => write!(f, "gamma:{g}"),
            SelectionRule::TopD(d) => write!(f, "topd:{d}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScreeningResult {
    pub utilities: Vec<f64>,
    /// Feature indices by descending utility, ties by ascending index.
    pub ranking: Vec<usize>,
    /// Retained feature indices, ascending.
    pub selected: Vec<usize>,
    pub rule: SelectionRule,
}

/// Indices sorted by descending utility with ascending-index tie-break.
pub fn rank_descending(utilities: &[f64]) -> Vec<usize> {
    let mut ranking: Vec<usize> = (0..utilities.len()).collect();
    ranking.sort_by(|&a, &b| utilities[b].total_cmp(&utilities[a]).then(a.cmp(&b)));
    ranking
}

pub fn select(utilities: &[f64], rule: SelectionRule) -> Result<ScreeningResult> {
    if utilities.iter().any(|u| !u.is_finite() || *u < 0.0) {
        return Err(Error::InvalidRule(
            "utilities must be finite and nonnegative".into(),
        ));
    }
    let ranking = rank_descending(utilities);
    let mut selected: Vec<usize> = match rule {
        SelectionRule::Threshold(gamma) => {
            if !(gamma >= 0.0) {
                return Err(Error::InvalidRule(format!("threshold {gamma} is negative")));
            }
            (0..utilities.len())
                .filter(|&j| utilities[j] >= gamma)
                .collect()
        }
        SelectionRule::TopD(d) => {
            if d == 0 {
                return Err(Error::InvalidRule("d must be positive".into()));
            }
            ranking
                .iter()
                .copied()
                .take(d)
                .take_while(|&j| utilities[j] > 0.0)
                .collect()
        }
    };
    selected.sort_unstable();
    Ok(ScreeningResult {
        utilities: utilities.to_vec(),
        ranking,
        selected,
        rule,
    })
}

const MAGIC: &[u8; 4] = b"SSCR";
const WIRE_VERSION: u16 = 1;
const HEADER_LEN: usize = 4 + 2 + 1 + 8 + 8;

impl ShardSummary {
    /// Little-endian record: `"SSCR"`, version `u16`, method `u8`, `p` `u64`,
    /// `n` `u64`, then a `p × {1, 9, 2}` block of `f64` (SAPS, ACPS, JDPS).
    /// Degenerate entries are written as NaN.
    pub fn to_bytes(&self) -> Vec<u8> {
        let p = self.nfeatures();
        let width = match self.method() {
            Method::Saps => 1,
            Method::Acps => 9,
            Method::Jdps => 2,
        };
        let mut out = Vec::with_capacity(HEADER_LEN + 8 * width * p);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&WIRE_VERSION.to_le_bytes());
        out.push(self.method().code());
        out.extend_from_slice(&(p as u64).to_le_bytes());
        out.extend_from_slice(&(self.shard_size as u64).to_le_bytes());
        let mut put = |v: f64| out.extend_from_slice(&v.to_le_bytes());
        match &self.payload {
            ShardPayload::Saps(v) => v.iter().for_each(|r| put(r.unwrap_or(f64::NAN))),
            ShardPayload::Acps(v) => v.iter().for_each(|m| m.to_array().into_iter().for_each(&mut put)),
            ShardPayload::Jdps(v) => v.iter().for_each(|e| match e {
                Some(e) => {
                    put(e.rho);
                    put(e.delta);
                }
                None => {
                    put(f64::NAN);
                    put(f64::NAN);
                }
            }),
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let err = |m: &str| Error::WireFormat(m.to_string());
        if bytes.len() < HEADER_LEN {
            return Err(err("truncated header"));
        }
        if &bytes[..4] != MAGIC {
            return Err(err("bad magic"));
        }
        let version = u16::from_le_bytes([bytes[4], bytes[5]]);
        if version != WIRE_VERSION {
            return Err(err(&format!("unsupported version {version}")));
        }
        let method = Method::from_code(bytes[6]).ok_or_else(|| err("unknown method code"))?;
        let read_u64 = |at: usize| u64::from_le_bytes(bytes[at..at + 8].try_into().unwrap());
        let p = usize::try_from(read_u64(7)).map_err(|_| err("feature count too large"))?;
        let n = read_u64(15);
        let width = match method {
            Method::Saps => 1,
            Method::Acps => 9,
            Method::Jdps => 2,
        };
        let expected = p
            .checked_mul(8 * width)
            .and_then(|b| b.checked_add(HEADER_LEN))
            .ok_or_else(|| err("payload size overflow"))?;
        if bytes.len() != expected {
            return Err(err(&format!(
                "payload length {} does not match p={p}",
                bytes.len() - HEADER_LEN
            )));
        }
        let values: Vec<f64> = bytes[HEADER_LEN..]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let finite = |v: f64| if v.is_nan() { None } else { Some(v) };
        let payload = match method {
            Method::Saps => ShardPayload::Saps(values.into_iter().map(finite).collect()),
            Method::Acps => ShardPayload::Acps(
                values
                    .chunks_exact(9)
                    .map(|c| MomentVector::from_array(c.try_into().unwrap(), n))
                    .collect(),
            ),
            Method::Jdps => ShardPayload::Jdps(
                values
                    .chunks_exact(2)
                    .map(|c| {
                        (!c[0].is_nan() && !c[1].is_nan()).then_some(JackknifeEstimate {
                            rho: c[0],
                            delta: c[1],
                        })
                    })
                    .collect(),
            ),
        };
        Ok(ShardSummary {
            payload,
            shard_size: n as usize,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::{accumulate_moments, partial_correlation_of, TripleSample};
    use proptest::prelude::*;
    use rand::Rng;

    fn random_block(rng: &mut ChaCha8Rng, n: usize, p: usize) -> DataBlock {
        let z: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let features: Vec<Vec<f64>> = (0..p)
            .map(|j| {
                z.iter()
                    .map(|zi| 0.3 * (j as f64 % 3.0) * zi + rng.gen_range(-1.0..1.0))
                    .collect()
            })
            .collect();
        let y = (0..n)
            .map(|i| features[0][i] - 0.5 * features[1 % p][i] + z[i] + rng.gen_range(-1.0..1.0))
            .collect();
        DataBlock::new(y, z, features).unwrap()
    }

    fn random_dataset(seed: u64, n: usize, p: usize) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Dataset::with_default_names(random_block(&mut rng, n, p))
    }

    // Literal leave-one-out: rebuild every deleted sample and recompute from scratch.
    fn literal_delta(y: &[f64], x: &[f64], z: &[f64]) -> f64 {
        let n = y.len();
        let rho = partial_correlation_of(&TripleSample::new(y, x, z).unwrap()).unwrap();
        let mut total = 0.0;
        for i in 0..n {
            let drop = |v: &[f64]| -> Vec<f64> {
                v.iter()
                    .enumerate()
                    .filter(|(k, _)| *k != i)
                    .map(|(_, v)| *v)
                    .collect()
            };
            let (yi, xi, zi) = (drop(y), drop(x), drop(z));
            total += partial_correlation_of(&TripleSample::new(&yi, &xi, &zi).unwrap()).unwrap();
        }
        let nf = n as f64;
        (nf - 1.0) / nf * total - (nf - 1.0) * rho
    }

    #[test]
    fn single_shard_is_the_input() {
        let data = random_dataset(1, 30, 4);
        let sharded = shard_dataset(&data, 1, Shuffle::Off).unwrap();
        assert_eq!(sharded.shards()[0], data.block);
    }

    #[test]
    fn remainder_rows_go_to_first_shards() {
        let data = random_dataset(2, 10, 2);
        let sharded = shard_dataset(&data, 3, Shuffle::Off).unwrap();
        assert_eq!(sharded.shard_sizes(), vec![4, 3, 3]);
        let shuffled = shard_dataset(&data, 3, Shuffle::Seeded(9)).unwrap();
        assert_eq!(shuffled.shard_sizes(), vec![4, 3, 3]);
    }

    #[test]
    fn shuffled_shards_are_a_disjoint_cover_and_deterministic() {
        let data = random_dataset(3, 25, 1);
        let a = shard_dataset(&data, 4, Shuffle::Seeded(5)).unwrap();
        let b = shard_dataset(&data, 4, Shuffle::Seeded(5)).unwrap();
        assert_eq!(a.shards(), b.shards());
        let mut seen: Vec<f64> = a
            .shards()
            .iter()
            .flat_map(|s| s.response().to_vec())
            .collect();
        let mut orig = data.block.response().to_vec();
        seen.sort_by(f64::total_cmp);
        orig.sort_by(f64::total_cmp);
        assert_eq!(seen, orig);
    }

    #[test]
    fn too_many_shards() {
        let data = random_dataset(4, 10, 1);
        assert!(matches!(
            shard_dataset(&data, 4, Shuffle::Off),
            Err(Error::TooManyShards { .. })
        ));
    }

    #[test]
    fn acps_shard_moments_match_saps_entries() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let block = random_block(&mut rng, 40, 5);
        let saps = summarize_shard(&block, Method::Saps).unwrap();
        let acps = summarize_shard(&block, Method::Acps).unwrap();
        let (ShardPayload::Saps(r), ShardPayload::Acps(m)) = (&saps.payload, &acps.payload) else {
            panic!("wrong payloads");
        };
        for (r, m) in r.iter().zip(m) {
            assert!((r.unwrap() - partial_correlation(m).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn jackknife_matches_literal_leave_one_out_on_ten_rows() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let block = random_block(&mut rng, 10, 3);
        let s = summarize_shard(&block, Method::Jdps).unwrap();
        let ShardPayload::Jdps(est) = &s.payload else { panic!() };
        for (j, e) in est.iter().enumerate() {
            let oracle = literal_delta(block.response(), block.feature(j), block.conditional());
            assert!((e.unwrap().delta - oracle).abs() < 1e-10);
        }
    }

    #[test]
    fn feature_equal_to_conditional_is_flagged_alone() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let block = random_block(&mut rng, 20, 3);
        let mut cols = block.features().to_vec();
        cols[1] = block.conditional().to_vec();
        let block = block.with_features(cols).unwrap();
        for method in Method::ALL {
            let s = summarize_shard(&block, method).unwrap();
            match &s.payload {
                ShardPayload::Saps(v) => {
                    assert!(v[0].is_some() && v[1].is_none() && v[2].is_some())
                }
                ShardPayload::Jdps(v) => {
                    assert!(v[0].is_some() && v[1].is_none() && v[2].is_some())
                }
                ShardPayload::Acps(_) => {
                    let u = aggregate_acps(std::slice::from_ref(&s)).unwrap();
                    assert_eq!(u.unreliable, vec![false, true, false]);
                    assert_eq!(u.values[1], 0.0);
                }
            }
        }
    }

    #[test]
    fn fully_degenerate_feature_is_unreliable() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let blocks: Vec<DataBlock> = (0..3)
            .map(|_| {
                let b = random_block(&mut rng, 12, 2);
                let mut cols = b.features().to_vec();
                cols[0] = vec![1.0; 12];
                b.with_features(cols).unwrap()
            })
            .collect();
        let data = ShardedDataset::from_shards(blocks, vec!["a".into(), "b".into()]).unwrap();
        for method in Method::ALL {
            let u = screen(&data, method).unwrap();
            assert_eq!(u.unreliable, vec![true, false]);
            assert_eq!(u.values[0], 0.0);
        }
    }

    fn saps_summary(r: Vec<f64>) -> ShardSummary {
        ShardSummary {
            payload: ShardPayload::Saps(r.into_iter().map(Some).collect()),
            shard_size: 10,
        }
    }

    #[test]
    fn saps_arithmetic() {
        let u = aggregate_saps(&[saps_summary(vec![0.3])]).unwrap();
        assert_eq!(u.values, vec![0.3]);
        let u = aggregate_saps(&[saps_summary(vec![0.4]), saps_summary(vec![-0.4])]).unwrap();
        assert_eq!(u.values, vec![0.0]);
        let u = aggregate_saps(&[
            saps_summary(vec![0.1]),
            saps_summary(vec![0.2]),
            saps_summary(vec![0.6]),
        ])
        .unwrap();
        assert!((u.values[0] - 0.3).abs() < 1e-15);
    }

    #[test]
    fn saps_skips_degenerate_shards() {
        let a = ShardSummary {
            payload: ShardPayload::Saps(vec![None, Some(0.2)]),
            shard_size: 5,
        };
        let b = saps_summary(vec![-0.5, 0.4]);
        let u = aggregate_saps(&[a, b]).unwrap();
        assert!((u.values[0] - 0.5).abs() < 1e-15);
        assert!((u.values[1] - 0.3).abs() < 1e-15);
        assert_eq!(u.unreliable, vec![false, false]);
    }

    #[test]
    fn mixed_methods_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let block = random_block(&mut rng, 10, 2);
        let a = summarize_shard(&block, Method::Saps).unwrap();
        let b = summarize_shard(&block, Method::Acps).unwrap();
        assert!(matches!(aggregate_saps(&[a, b]), Err(Error::MethodMismatch)));
    }

    #[test]
    fn acps_with_unequal_shards_matches_centralized() {
        let data = random_dataset(11, 20, 4);
        let shards = vec![data.block.rows(0..7), data.block.rows(7..20)];
        let sharded = ShardedDataset::from_shards(shards, data.feature_names.clone()).unwrap();
        let acps = screen(&sharded, Method::Acps).unwrap();
        for j in 0..4 {
            let b = &data.block;
            let m = accumulate_moments(
                &TripleSample::new(b.response(), b.feature(j), b.conditional()).unwrap(),
            );
            let central = partial_correlation(&m).unwrap().abs();
            assert!((acps.values[j] - central).abs() <= 1e-12 * central.max(1e-3));
        }
    }

    #[test]
    fn acps_single_shard_equals_centralized_exactly() {
        let data = random_dataset(12, 30, 3);
        let sharded = shard_dataset(&data, 1, Shuffle::Off).unwrap();
        let acps = screen(&sharded, Method::Acps).unwrap();
        let saps = screen(&sharded, Method::Saps).unwrap();
        assert_eq!(acps.values, saps.values);
    }

    #[test]
    fn jdps_zero_correction_equals_saps() {
        let rho = vec![0.25, -0.1, 0.7];
        let jd: Vec<ShardSummary> = [rho.clone(), rho.iter().map(|r| r * 0.5).collect()]
            .into_iter()
            .map(|r| ShardSummary {
                payload: ShardPayload::Jdps(
                    r.into_iter()
                        .map(|rho| Some(JackknifeEstimate { rho, delta: 0.0 }))
                        .collect(),
                ),
                shard_size: 10,
            })
            .collect();
        let sa = vec![
            saps_summary(rho.clone()),
            saps_summary(rho.iter().map(|r| r * 0.5).collect()),
        ];
        assert_eq!(
            aggregate_jdps(&jd).unwrap().values,
            aggregate_saps(&sa).unwrap().values
        );
    }

    #[test]
    fn jdps_single_shard_uses_literal_delta() {
        let data = random_dataset(13, 15, 2);
        let sharded = shard_dataset(&data, 1, Shuffle::Off).unwrap();
        let u = screen(&sharded, Method::Jdps).unwrap();
        let b = &data.block;
        for j in 0..2 {
            let rho = partial_correlation_of(
                &TripleSample::new(b.response(), b.feature(j), b.conditional()).unwrap(),
            )
            .unwrap();
            let delta = literal_delta(b.response(), b.feature(j), b.conditional());
            assert!((u.values[j] - (rho - delta).abs()).abs() < 1e-10);
        }
    }

    #[test]
    fn negating_a_feature_negates_jackknife_terms() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let block = random_block(&mut rng, 16, 2);
        let neg: Vec<Vec<f64>> = block
            .features()
            .iter()
            .map(|c| c.iter().map(|v| -v).collect())
            .collect();
        let flipped = block.with_features(neg).unwrap();
        let (ShardPayload::Jdps(a), ShardPayload::Jdps(b)) = (
            summarize_shard(&block, Method::Jdps).unwrap().payload,
            summarize_shard(&flipped, Method::Jdps).unwrap().payload,
        ) else {
            panic!()
        };
        for (a, b) in a.iter().zip(&b) {
            let (a, b) = (a.unwrap(), b.unwrap());
            assert!((a.rho + b.rho).abs() < 1e-14);
            assert!((a.delta + b.delta).abs() < 1e-12);
        }
        let ua = aggregate_jdps(&[summarize_shard(&block, Method::Jdps).unwrap()]).unwrap();
        let ub = aggregate_jdps(&[summarize_shard(&flipped, Method::Jdps).unwrap()]).unwrap();
        for (x, y) in ua.values.iter().zip(&ub.values) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn topd_and_threshold_selection() {
        let u = [0.9, 0.1, 0.5];
        assert_eq!(select(&u, SelectionRule::TopD(2)).unwrap().selected, vec![0, 2]);
        let r = select(&u, SelectionRule::Threshold(0.5)).unwrap();
        assert_eq!(r.selected, vec![0, 2]);
        assert_eq!(r.ranking, vec![0, 2, 1]);
        let tied = [0.5, 0.5, 0.2];
        assert_eq!(select(&tied, SelectionRule::TopD(1)).unwrap().selected, vec![0]);
    }

    #[test]
    fn topd_never_takes_zero_utilities() {
        let u = [0.0, 0.3, 0.0, 0.1];
        assert_eq!(select(&u, SelectionRule::TopD(3)).unwrap().selected, vec![1, 3]);
    }

    #[test]
    fn invalid_rules() {
        assert!(matches!(
            select(&[0.1], SelectionRule::TopD(0)),
            Err(Error::InvalidRule(_))
        ));
        assert!(matches!(
            select(&[0.1], SelectionRule::Threshold(-0.1)),
            Err(Error::InvalidRule(_))
        ));
        assert_eq!(
            "topd:12".parse::<SelectionRule>().unwrap(),
            SelectionRule::TopD(12)
        );
        assert_eq!(
            "gamma:0.25".parse::<SelectionRule>().unwrap(),
            SelectionRule::Threshold(0.25)
        );
        assert!("top:3".parse::<SelectionRule>().is_err());
    }

    #[test]
    fn default_top_d() {
        // 10000 / ln 10000 = 1085.7
        assert_eq!(SelectionRule::default_top_d(10_000), 1085);
    }

    #[test]
    fn wire_format_rejects_bad_records() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let block = random_block(&mut rng, 10, 3);
        let bytes = summarize_shard(&block, Method::Jdps).unwrap().to_bytes();
        assert_eq!(&bytes[..4], b"SSCR");
        assert_eq!(bytes.len(), HEADER_LEN + 3 * 2 * 8);
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(ShardSummary::from_bytes(&bad).is_err());
        assert!(ShardSummary::from_bytes(&bytes[..bytes.len() - 1]).is_err());
        let mut bad = bytes.clone();
        bad[6] = 7;
        assert!(ShardSummary::from_bytes(&bad).is_err());
    }

    proptest! {
        #[test]
        fn wire_format_round_trips(seed in any::<u64>(), n in 4usize..30, p in 1usize..6, m in 0usize..3) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let block = random_block(&mut rng, n, p);
            let s = summarize_shard(&block, Method::ALL[m]).unwrap();
            prop_assert_eq!(ShardSummary::from_bytes(&s.to_bytes()).unwrap(), s);
        }

        #[test]
        fn shard_order_does_not_change_aggregates(seed in any::<u64>(), k in 2usize..6, m in 0usize..3) {
            let data = random_dataset(seed, 12 * k, 3);
            let sharded = shard_dataset(&data, k, Shuffle::Off).unwrap();
            let method = Method::ALL[m];
            let mut sums = summarize_all(&sharded, method).unwrap();
            let forward = aggregate(method, &sums).unwrap();
            sums.reverse();
            let backward = aggregate(method, &sums).unwrap();
            for (a, b) in forward.values.iter().zip(&backward.values) {
                prop_assert!((a - b).abs() <= 1e-13);
            }
        }

        #[test]
        fn jackknife_fast_path_matches_literal(seed in any::<u64>(), n in 5usize..=50) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let block = random_block(&mut rng, n, 2);
            let s = summarize_shard(&block, Method::Jdps).unwrap();
            let ShardPayload::Jdps(est) = &s.payload else { panic!() };
            for (j, e) in est.iter().enumerate() {
                let oracle = literal_delta(block.response(), block.feature(j), block.conditional());
                prop_assert!((e.unwrap().delta - oracle).abs() < 1e-10);
            }
        }
    }
}

//! Second-order knockoffs and knockoff-based FDR thresholding.
//!
//! For a centered, unit-norm block `X` with Gram matrix `Σ = XᵀX`, knockoffs
//! are built as `X̃ = X(I − Σ⁻¹ diag{s}) + Ũ C` where `Ũ` is an orthonormal
//! basis orthogonal to the columns of `X` and `CᵀC = 2 diag{s} − diag{s} Σ⁻¹ diag{s}`.
//! Then `X̃ᵀX̃ = Σ` and `XᵀX̃ = Σ − diag{s}`.

use std::fmt::Write as _;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector, Dyn, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::data::DataBlock;
use crate::error::{Error, Result};
use crate::seed::derive_seed;
use crate::shard::{self, Method, SelectionRule, ShardedDataset};

/// Smallest admissible eigenvalue of the Gram matrix.
pub const EIG_FLOOR: f64 = 1e-8;
/// Ridge added to a near-singular Gram matrix before renormalizing.
pub const RIDGE: f64 = 1e-6;
/// Tolerance on PSD constraints.
pub const PSD_TOL: f64 = 1e-9;
/// Sweep cap for the coordinate-ascent `s` solver.
pub const SDP_MAX_SWEEPS: usize = 100;

const BASIS_MAX_REDRAWS: u64 = 8;

/// A centered block with unit-norm columns and its Gram matrix.
#[derive(Debug, Clone)]
pub struct ScaledBlock {
    pub matrix: DMatrix<f64>,
    pub gram: DMatrix<f64>,
}

/// Center each column and scale it to unit Euclidean norm.
pub fn scale_block(columns: &[Vec<f64>]) -> Result<ScaledBlock> {
    let d = columns.len();
    let n = columns.first().map_or(0, Vec::len);
    if d == 0 || n < 2 * d {
        return Err(Error::InsufficientRows { rows: n, cols: d });
    }
    if columns.iter().any(|c| c.len() != n) {
        return Err(Error::ShapeMismatch("block columns differ in length".into()));
    }
    let mut matrix = DMatrix::<f64>::zeros(n, d);
    for (j, col) in columns.iter().enumerate() {
        let mean = col.iter().sum::<f64>() / n as f64;
        let scale2: f64 = col.iter().map(|v| (v - mean) * (v - mean)).sum();
        let mean_sq = col.iter().map(|v| v * v).sum::<f64>() / n as f64;
        if !(scale2 > 1e-12 * n as f64 * mean_sq) || scale2 == 0.0 {
            return Err(Error::ConstantColumn(j));
        }
        let inv = 1.0 / scale2.sqrt();
        for (i, v) in col.iter().enumerate() {
            matrix[(i, j)] = (v - mean) * inv;
        }
    }
    let mut gram = matrix.transpose() * &matrix;
    for j in 0..d {
        gram[(j, j)] = 1.0;
    }
    gram = (&gram + gram.transpose()) * 0.5;
    Ok(ScaledBlock { matrix, gram })
}

/// Symmetric eigendecomposition checked by reconstruction. The default
/// convergence tolerance of `symmetric_eigen` can return a wrong
/// decomposition on some PSD matrices with a zero eigenvalue, so a few
/// slightly looser tolerances are tried and the first accurate one kept.
fn sym_eigen(m: &DMatrix<f64>) -> SymmetricEigen<f64, Dyn> {
    let scale = m.norm().max(1.0);
    let mut best: Option<(f64, SymmetricEigen<f64, Dyn>)> = None;
    for eps in [1e-15, 1e-14, 1e-13, 1e-12] {
        let Some(e) = m.clone().try_symmetric_eigen(eps, 0) else {
            continue;
        };
        let rebuilt = &e.eigenvectors * DMatrix::from_diagonal(&e.eigenvalues) * e.eigenvectors.transpose();
        let err = (rebuilt - m).norm() / scale;
        if err <= 1e-12 {
            return e;
        }
        if best.as_ref().is_none_or(|(b, _)| err < *b) {
            best = Some((err, e));
        }
    }
    best.map(|(_, e)| e).unwrap_or_else(|| m.clone().symmetric_eigen())
}

pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    sym_eigen(m).eigenvalues.min()
}

/// `Σ + δI` renormalized to unit diagonal.
pub fn ridge_gram(gram: &DMatrix<f64>) -> DMatrix<f64> {
    let d = gram.nrows();
    (gram + DMatrix::<f64>::identity(d, d) * RIDGE) / (1.0 + RIDGE)
}

/// Equicorrelated construction: `s_j = min(2 λ_min(Σ), 1)`.
pub fn knockoff_s_equi(gram: &DMatrix<f64>) -> Result<Vec<f64>> {
    let lambda = min_eigenvalue(gram);
    if !(lambda > EIG_FLOOR) {
        return Err(Error::NearSingularGram);
    }
    Ok(vec![(2.0 * lambda).min(1.0); gram.nrows()])
}

/// How the `s` vector is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SMethod {
    Equicorrelated,
    Sdp,
}

impl FromStr for SMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "equi" | "equicorrelated" => Ok(SMethod::Equicorrelated),
            "sdp" => Ok(SMethod::Sdp),
            other => Err(Error::Config(format!("unknown s construction `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SdpOutcome {
    pub s: Vec<f64>,
    /// The solver could not improve on (or certify) its iterate and
    /// returned the equicorrelated vector instead.
    pub fell_back: bool,
}

fn sdp_objective(s: &[f64]) -> f64 {
    s.iter().map(|v| (1.0 - v).abs()).sum()
}

/// Approximate solution of `min Σ|1 − s_j|` s.t. `0 ≤ s_j ≤ 1`, `2Σ − diag{s} ⪰ 0`.
///
/// Coordinate ascent from a point just inside the equicorrelated solution:
/// each coordinate moves most of the way to its exact boundary
/// `1 / [(2Σ − diag{s})⁻¹]_jj`, with the inverse maintained by
/// Sherman–Morrison updates. Feasibility is re-checked by an eigenvalue
/// computation after every sweep.
pub fn knockoff_s_sdp(gram: &DMatrix<f64>) -> Result<SdpOutcome> {
    const STEP: f64 = 0.99;
    const SHRINK: f64 = 1.0 - 1e-6;

    let equi = knockoff_s_equi(gram)?;
    let d = gram.nrows();
    let fallback = || SdpOutcome {
        s: equi.clone(),
        fell_back: true,
    };
    let mut s: Vec<f64> = equi.iter().map(|v| v * SHRINK).collect();
    let slack = |s: &[f64]| {
        let mut a = gram * 2.0;
        for j in 0..d {
            a[(j, j)] -= s[j];
        }
        a
    };
    let Some(mut inv) = slack(&s).cholesky().map(|c| c.inverse()) else {
        return Ok(fallback());
    };
    let mut accepted = s.clone();
    for _ in 0..SDP_MAX_SWEEPS {
        let before = sdp_objective(&s);
        for j in 0..d {
            let room = 1.0 - s[j];
            if room <= 0.0 || !(inv[(j, j)] > 0.0) {
                continue;
            }
            let t = (STEP / inv[(j, j)]).min(room);
            if t <= 0.0 {
                continue;
            }
            // (A − t e eᵀ)⁻¹ = A⁻¹ + t A⁻¹e eᵀA⁻¹ / (1 − t A⁻¹_jj)
            let denom = 1.0 - t * inv[(j, j)];
            if !(denom > 0.0) {
                continue;
            }
            let col: DVector<f64> = inv.column(j).into_owned();
            inv += &col * col.transpose() * (t / denom);
            s[j] += t;
        }
        if min_eigenvalue(&slack(&s)) < -PSD_TOL {
            break;
        }
        accepted = s.clone();
        if before - sdp_objective(&s) < 1e-12 {
            break;
        }
        // Refresh the inverse to stop drift from repeated rank-one updates.
        match slack(&s).cholesky() {
            Some(c) => inv = c.inverse(),
            None => break,
        }
    }
    if sdp_objective(&accepted) > sdp_objective(&equi) {
        return Ok(fallback());
    }
    Ok(SdpOutcome {
        s: accepted,
        fell_back: false,
    })
}

/// Knockoff copy of one scaled block.
#[derive(Debug, Clone)]
pub struct KnockoffModel {
    pub gram: DMatrix<f64>,
    pub s: Vec<f64>,
    pub knockoffs: DMatrix<f64>,
    pub ortho_basis: DMatrix<f64>,
    pub c_factor: DMatrix<f64>,
}

/// Orthonormal `n × d` basis orthogonal to the columns of `x`, from the QR
/// factorization of `[X | G]` with `G` standard Gaussian.
fn orthogonal_basis(x: &DMatrix<f64>, seed: u64) -> Result<DMatrix<f64>> {
    let (n, d) = x.shape();
    for attempt in 0..BASIS_MAX_REDRAWS {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(attempt));
        let mut aug = DMatrix::<f64>::zeros(n, 2 * d);
        aug.columns_mut(0, d).copy_from(x);
        for j in d..2 * d {
            for i in 0..n {
                aug[(i, j)] = StandardNormal.sample(&mut rng);
            }
        }
        let qr = aug.qr();
        let r = qr.r();
        let tol = 1e-8 * (n as f64).sqrt();
        if (0..2 * d).all(|k| r[(k, k)].abs() > tol * if k < d { 1e-6 } else { 1.0 }) {
            return Ok(qr.q().columns(d, d).into_owned());
        }
    }
    Err(Error::InsufficientRows { rows: n, cols: d })
}

/// Upper-triangular `C` with `CᵀC` the PSD projection of `m`.
fn psd_factor(m: &DMatrix<f64>) -> DMatrix<f64> {
    let sym = (m + m.transpose()) * 0.5;
    let eig = sym_eigen(&sym);
    let d = m.nrows();
    let mut root = eig.eigenvectors.transpose();
    for i in 0..d {
        let scale = eig.eigenvalues[i].max(0.0).sqrt();
        root.row_mut(i).scale_mut(scale);
    }
    root.qr().r()
}

/// Build knockoffs for a scaled block.
pub fn generate_knockoffs(scaled: &ScaledBlock, s: &[f64], seed: u64) -> Result<KnockoffModel> {
    let x = &scaled.matrix;
    let (n, d) = x.shape();
    if s.len() != d {
        return Err(Error::ShapeMismatch(format!("s has {} entries for {d} columns", s.len())));
    }
    if n < 2 * d {
        return Err(Error::InsufficientRows { rows: n, cols: d });
    }
    let gram = &scaled.gram;
    let gram_inv = gram
        .clone()
        .cholesky()
        .ok_or(Error::NearSingularGram)?
        .inverse();
    let diag_s = DMatrix::from_diagonal(&DVector::from_column_slice(s));
    let inner = &diag_s * 2.0 - &diag_s * &gram_inv * &diag_s;
    let c_factor = psd_factor(&inner);
    let ortho_basis = orthogonal_basis(x, seed)?;
    let shrink = DMatrix::<f64>::identity(d, d) - &gram_inv * &diag_s;
    let knockoffs = x * shrink + &ortho_basis * &c_factor;
    Ok(KnockoffModel {
        gram: gram.clone(),
        s: s.to_vec(),
        knockoffs,
        ortho_basis,
        c_factor,
    })
}

/// Utilities of the real and knockoff columns and their difference `ψ̂`.
#[derive(Debug, Clone, PartialEq)]
pub struct KnockoffStats {
    pub psi: Vec<f64>,
    pub omega_real: Vec<f64>,
    pub omega_knock: Vec<f64>,
}

/// `ψ̂_j = ω̂(Y, X_j, Z) − ω̂(Y, X̃_j, Z)` with both utilities estimated by the
/// same distributed method over the same shards.
pub fn knockoff_stats(real: &[DataBlock], knock: &[DataBlock], method: Method) -> Result<KnockoffStats> {
    if real.len() != knock.len() || real.is_empty() {
        return Err(Error::ShapeMismatch(
            "real and knockoff blocks must cover the same shards".into(),
        ));
    }
    for (r, k) in real.iter().zip(knock) {
        if r.nfeatures() != k.nfeatures() || r.nrows() != k.nrows() {
            return Err(Error::ShapeMismatch(
                "real and knockoff blocks differ in shape".into(),
            ));
        }
    }
    let utilities = |blocks: &[DataBlock]| -> Result<Vec<f64>> {
        let summaries = blocks
            .par_iter()
            .enumerate()
            .map(|(k, b)| shard::summarize_shard(b, method).map_err(|e| e.in_shard(k)))
            .collect::<Result<Vec<_>>>()?;
        Ok(shard::aggregate(method, &summaries)?.values)
    };
    let omega_real = utilities(real)?;
    let omega_knock = utilities(knock)?;
    let psi = omega_real
        .iter()
        .zip(&omega_knock)
        .map(|(a, b)| a - b)
        .collect();
    Ok(KnockoffStats {
        psi,
        omega_real,
        omega_knock,
    })
}

/// `#{ψ̂_j ≤ −t} / #{ψ̂_j ≥ t}`; `+∞` when nothing reaches `t`.
pub fn fdp_hat(psi: &[f64], t: f64) -> f64 {
    let neg = psi.iter().filter(|&&v| v <= -t).count();
    let pos = psi.iter().filter(|&&v| v >= t).count();
    if pos == 0 {
        f64::INFINITY
    } else {
        neg as f64 / pos as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FdrSelection {
    pub alpha: f64,
    /// `+∞` when no candidate threshold qualifies.
    pub threshold: f64,
    /// Indices into `psi`, ascending.
    pub selected: Vec<usize>,
    pub fdp_hat: f64,
}

/// Smallest `t ∈ {|ψ̂_j|} \ {0}` with `(1 + #{ψ̂ ≤ −t}) / #{ψ̂ ≥ t} ≤ α`.
pub fn select_threshold(psi: &[f64], alpha: f64) -> Result<FdrSelection> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::Config(format!("alpha {alpha} outside [0, 1]")));
    }
    let mut sorted: Vec<f64> = psi.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut candidates: Vec<f64> = psi.iter().map(|v| v.abs()).filter(|&v| v > 0.0).collect();
    candidates.sort_by(f64::total_cmp);
    candidates.dedup();
    let p = sorted.len();
    let threshold = candidates
        .into_iter()
        .find(|&t| {
            let neg = sorted.partition_point(|&v| v <= -t);
            let pos = p - sorted.partition_point(|&v| v < t);
            pos > 0 && (1.0 + neg as f64) / pos as f64 <= alpha
        })
        .unwrap_or(f64::INFINITY);
    let selected = (0..p).filter(|&j| psi[j] >= threshold).collect();
    Ok(FdrSelection {
        alpha,
        threshold,
        selected,
        fdp_hat: fdp_hat(psi, threshold),
    })
}

/// Parameters of the two-stage screening procedure.
#[derive(Debug, Clone, PartialEq)]
pub struct KnockoffConfig {
    pub alpha: f64,
    /// Size of the first-stage retained set.
    pub d: usize,
    /// First-stage rows per shard; defaults to all rows not in the second split.
    pub n1: Option<usize>,
    /// Second-stage rows per shard (the last `n2` rows of each shard).
    pub n2: usize,
    pub method: Method,
    pub s_method: SMethod,
    pub seed: u64,
}

impl KnockoffConfig {
    /// `n₂ = min(n − 3, max(2d + 10, ⌊2n/3⌋))`.
    pub fn default_n2(n: usize, d: usize) -> usize {
        n.saturating_sub(3).min((2 * d + 10).max(2 * n / 3))
    }
}

/// Summary of one shard's `s` vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SSummary {
    pub min: f64,
    pub mean: f64,
    pub max: f64,
}

impl SSummary {
    fn of(s: &[f64]) -> Self {
        SSummary {
            min: s.iter().copied().fold(f64::INFINITY, f64::min),
            mean: s.iter().sum::<f64>() / s.len() as f64,
            max: s.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

/// Everything needed to audit one run of the two-stage procedure.
#[derive(Debug, Clone, PartialEq)]
pub struct AuditRecord {
    pub method: Method,
    pub shards: usize,
    pub n1: usize,
    pub n2: usize,
    pub d: usize,
    pub alpha: f64,
    /// First-stage retained features, ascending.
    pub first_stage: Vec<usize>,
    /// First-stage utilities for all features.
    pub first_stage_utilities: Vec<f64>,
    pub s_summaries: Vec<SSummary>,
    pub ridged_shards: Vec<usize>,
    pub sdp_fallback_shards: Vec<usize>,
    /// `ψ̂` aligned with `first_stage`.
    pub psi: Vec<f64>,
    pub threshold: f64,
    /// Final selection as original feature indices, ascending.
    pub selected: Vec<usize>,
    pub fdp_hat: f64,
}

fn join<T: ToString>(v: impl IntoIterator<Item = T>) -> String {
    v.into_iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

impl AuditRecord {
    /// `key = value` lines; feature indices are 1-based.
    pub fn to_text(&self, feature_names: &[String]) -> String {
        let mut out = String::new();
        let one_based = |v: &[usize]| join(v.iter().map(|j| j + 1));
        let _ = writeln!(out, "method = {}", self.method);
        let _ = writeln!(out, "shards = {}", self.shards);
        let _ = writeln!(out, "n1 = {}", self.n1);
        let _ = writeln!(out, "n2 = {}", self.n2);
        let _ = writeln!(out, "d = {}", self.d);
        let _ = writeln!(out, "alpha = {}", self.alpha);
        let _ = writeln!(out, "first_stage = {}", one_based(&self.first_stage));
        for (k, s) in self.s_summaries.iter().enumerate() {
            let _ = writeln!(out, "s.shard{} = min={} mean={} max={}", k + 1, s.min, s.mean, s.max);
        }
        let _ = writeln!(out, "ridged_shards = {}", one_based(&self.ridged_shards));
        let _ = writeln!(out, "sdp_fallback_shards = {}", one_based(&self.sdp_fallback_shards));
        let _ = writeln!(out, "psi = {}", join(&self.psi));
        let _ = writeln!(out, "threshold = {}", self.threshold);
        let _ = writeln!(out, "selected = {}", one_based(&self.selected));
        let _ = writeln!(
            out,
            "selected_names = {}",
            self.selected
                .iter()
                .map(|&j| feature_names.get(j).map_or("?", String::as_str))
                .collect::<Vec<_>>()
                .join(",")
        );
        let _ = writeln!(out, "fdp_hat = {}", self.fdp_hat);
        out
    }
}

struct ShardKnockoffs {
    real: DataBlock,
    knock: DataBlock,
    s: Vec<f64>,
    ridged: bool,
    fell_back: bool,
}

fn shard_knockoffs(block: &DataBlock, s_method: SMethod, seed: u64) -> Result<ShardKnockoffs> {
    let mut scaled = scale_block(block.features())?;
    let mut ridged = false;
    if min_eigenvalue(&scaled.gram) <= EIG_FLOOR {
        scaled.gram = ridge_gram(&scaled.gram);
        ridged = true;
    }
    let (s, fell_back) = match s_method {
        SMethod::Equicorrelated => (knockoff_s_equi(&scaled.gram)?, false),
        SMethod::Sdp => {
            let out = knockoff_s_sdp(&scaled.gram)?;
            (out.s, out.fell_back)
        }
    };
    let model = generate_knockoffs(&scaled, &s, seed)?;
    let columns = |m: &DMatrix<f64>| -> Vec<Vec<f64>> {
        m.column_iter().map(|c| c.iter().copied().collect()).collect()
    };
    Ok(ShardKnockoffs {
        real: block.with_features(columns(&scaled.matrix))?,
        knock: block.with_features(columns(&model.knockoffs))?,
        s,
        ridged,
        fell_back,
    })
}

/// Two-stage distributed screening with knockoff FDR control.
///
/// Each shard's first `n1` rows drive a top-`d` screen; on the last `n2`
/// rows every shard builds knockoffs of the retained columns, and the
/// threshold is chosen from the distributed `ψ̂` statistics.
pub fn run_two_stage(data: &ShardedDataset, cfg: &KnockoffConfig) -> Result<(FdrSelection, AuditRecord)> {
    if cfg.d == 0 {
        return Err(Error::Config("d must be positive".into()));
    }
    if cfg.n2 <= 2 * cfg.d {
        return Err(Error::SplitTooSmall { n2: cfg.n2, d: cfg.d });
    }
    if !(0.0..=1.0).contains(&cfg.alpha) {
        return Err(Error::Config(format!("alpha {} outside [0, 1]", cfg.alpha)));
    }
    let min_rows = data.shard_sizes().into_iter().min().unwrap_or(0);
    let n1 = match cfg.n1 {
        Some(n1) if n1 + cfg.n2 > min_rows => {
            return Err(Error::Config(format!(
                "n1 + n2 = {} exceeds the smallest shard ({min_rows} rows)",
                n1 + cfg.n2
            )))
        }
        Some(n1) => n1,
        None => min_rows.saturating_sub(cfg.n2),
    };
    if n1 < cfg.method.min_shard_rows() {
        return Err(Error::InsufficientSamples {
            needed: cfg.method.min_shard_rows(),
            got: n1,
        });
    }

    let first: Vec<DataBlock> = data
        .shards()
        .iter()
        .map(|b| match cfg.n1 {
            Some(n1) => b.rows(0..n1),
            None => b.rows(0..b.nrows() - cfg.n2),
        })
        .collect();
    let first = ShardedDataset::from_shards(first, data.feature_names().to_vec())?;
    let first_utilities = shard::screen(&first, cfg.method)?.values;
    let first_stage = shard::select(&first_utilities, SelectionRule::TopD(cfg.d))?.selected;

    let mut audit = AuditRecord {
        method: cfg.method,
        shards: data.num_shards(),
        n1,
        n2: cfg.n2,
        d: cfg.d,
        alpha: cfg.alpha,
        first_stage: first_stage.clone(),
        first_stage_utilities: first_utilities,
        s_summaries: Vec::new(),
        ridged_shards: Vec::new(),
        sdp_fallback_shards: Vec::new(),
        psi: Vec::new(),
        threshold: f64::INFINITY,
        selected: Vec::new(),
        fdp_hat: f64::INFINITY,
    };
    if first_stage.is_empty() {
        let sel = FdrSelection {
            alpha: cfg.alpha,
            threshold: f64::INFINITY,
            selected: Vec::new(),
            fdp_hat: f64::INFINITY,
        };
        return Ok((sel, audit));
    }

    let built = data
        .shards()
        .par_iter()
        .enumerate()
        .map(|(k, b)| {
            let second = b.rows(b.nrows() - cfg.n2..b.nrows()).select_features(&first_stage);
            shard_knockoffs(&second, cfg.s_method, derive_seed(cfg.seed, k as u64))
                .map_err(|e| match e {
                    Error::ConstantColumn(j) => {
                        Error::ConstantColumn(first_stage[j]).in_feature(k, first_stage[j])
                    }
                    e => e.in_shard(k),
                })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut real = Vec::with_capacity(built.len());
    let mut knock = Vec::with_capacity(built.len());
    for (k, b) in built.into_iter().enumerate() {
        audit.s_summaries.push(SSummary::of(&b.s));
        if b.ridged {
            audit.ridged_shards.push(k);
        }
        if b.fell_back {
            audit.sdp_fallback_shards.push(k);
        }
        real.push(b.real);
        knock.push(b.knock);
    }
    let stats = knockoff_stats(&real, &knock, cfg.method)?;
    let local = select_threshold(&stats.psi, cfg.alpha)?;
    let selected: Vec<usize> = local.selected.iter().map(|&j| first_stage[j]).collect();
    audit.psi = stats.psi;
    audit.threshold = local.threshold;
    audit.selected = selected.clone();
    audit.fdp_hat = local.fdp_hat;
    Ok((
        FdrSelection {
            alpha: cfg.alpha,
            threshold: local.threshold,
            selected,
            fdp_hat: local.fdp_hat,
        },
        audit,
    ))
}

//! Command-line front end: CSV ingestion and the four commands.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use nalgebra::{DMatrix, DVector};

use crate::data::{DataBlock, Dataset};
use crate::error::{Error, Result};
use crate::knockoff::{self, SMethod};
use crate::shard::{self, Method, SelectionRule, Shuffle};
use crate::simulate::{self, SimConfig};

/// Ridge used when the least-squares design is rank deficient.
pub const OLS_RIDGE: f64 = 1e-8;

#[derive(Debug, Parser)]
#[command(name = "shardscreen", version, about = "Distributed conditional feature screening")]
pub struct Cli {
    /// Print progress to stderr.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run replicated simulations from a TOML config.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the seed in the config.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Rank features of a CSV dataset and cut the ranking.
    Screen {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, default_value = "acps")]
        method: Method,
        #[arg(long, default_value_t = 1)]
        shards: usize,
        /// `topd:<d>` or `gamma:<γ>`; defaults to `topd:⌊N/ln N⌋`.
        #[arg(long)]
        rule: Option<SelectionRule>,
        /// Shuffle rows before sharding.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Two-stage screening with a knockoff FDR threshold.
    Knockoff {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, default_value = "acps")]
        method: Method,
        #[arg(long, default_value_t = 1)]
        shards: usize,
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        d: usize,
        #[arg(long)]
        n1: Option<usize>,
        #[arg(long)]
        n2: Option<usize>,
        #[arg(long, default_value = "equi")]
        s: SMethod,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Least-squares fit on the training rows with a selected feature set;
    /// reports test RMSE.
    Evaluate {
        #[command(flatten)]
        data: DataArgs,
        /// Feature names, one per line.
        #[arg(long)]
        selected: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub response: String,
    /// Column name, or AUTO for the feature most correlated with the response.
    #[arg(long)]
    pub conditional: Option<String>,
    #[arg(long)]
    pub standardize: bool,
    /// Add all pairwise products of the features.
    #[arg(long)]
    pub interactions: bool,
    /// Drop rows with any feature more than this many standard deviations from its mean.
    #[arg(long)]
    pub outlier_sd: Option<f64>,
    /// First test row (0-based, after cleaning). Rows before it form the
    /// training split; screening uses only those.
    #[arg(long)]
    pub split: Option<usize>,
}

/// Which column plays the conditional role.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ConditionalSpec {
    None,
    Named(String),
    Auto,
}

impl ConditionalSpec {
    fn parse(arg: Option<&str>) -> Self {
        match arg {
            None => ConditionalSpec::None,
            Some(s) if s.eq_ignore_ascii_case("auto") => ConditionalSpec::Auto,
            Some(s) => ConditionalSpec::Named(s.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IngestOptions {
    pub response: String,
    pub conditional: ConditionalSpec,
    pub standardize: bool,
    pub interactions: bool,
    pub outlier_sd: Option<f64>,
    pub split: Option<usize>,
}

impl IngestOptions {
    pub fn from_args(a: &DataArgs) -> Self {
        IngestOptions {
            response: a.response.clone(),
            conditional: ConditionalSpec::parse(a.conditional.as_deref()),
            standardize: a.standardize,
            interactions: a.interactions,
            outlier_sd: a.outlier_sd,
            split: a.split,
        }
    }
}

/// A cleaned table ready for screening or fitting.
#[derive(Debug, Clone, PartialEq)]
pub struct Ingested {
    pub response: Vec<f64>,
    pub conditional: Option<(String, Vec<f64>)>,
    pub features: Vec<Vec<f64>>,
    pub names: Vec<String>,
    pub dropped_nonfinite: usize,
    pub dropped_outliers: usize,
    /// Rows in the training split.
    pub train_rows: usize,
}

impl Ingested {
    /// The training rows as a screening dataset.
    pub fn training_dataset(&self) -> Result<Dataset> {
        let (_, z) = self
            .conditional
            .as_ref()
            .ok_or_else(|| Error::Config("a conditional column is required".into()))?;
        let t = self.train_rows;
        let block = DataBlock::new(
            self.response[..t].to_vec(),
            z[..t].to_vec(),
            self.features.iter().map(|c| c[..t].to_vec()).collect(),
        )?;
        Dataset::new(block, self.names.clone())
    }
}

fn mean_sd(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let (ma, sa) = mean_sd(a);
    let (mb, sb) = mean_sd(b);
    if sa == 0.0 || sb == 0.0 {
        return 0.0;
    }
    let n = a.len() as f64;
    a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>() / (n * sa * sb)
}

/// Read a headed, comma-separated numeric table.
pub fn ingest_csv(path: &Path, opts: &IngestOptions) -> Result<Ingested> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
    let header: Vec<String> = reader.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let find = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::ColumnNotFound(name.to_string()))
    };
    let y_col = find(&opts.response)?;
    let z_named = match &opts.conditional {
        ConditionalSpec::Named(name) => Some(find(name)?),
        _ => None,
    };

    let width = header.len();
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); width];
    let mut dropped_nonfinite = 0;
    for record in reader.records() {
        let record = record?;
        let row: Vec<f64> = (0..width)
            .map(|i| {
                record
                    .get(i)
                    .and_then(|s| s.trim().parse::<f64>().ok())
                    .unwrap_or(f64::NAN)
            })
            .collect();
        if row.iter().all(|v| v.is_finite()) {
            for (c, v) in columns.iter_mut().zip(row) {
                c.push(v);
            }
        } else {
            dropped_nonfinite += 1;
        }
    }

    let x_cols: Vec<usize> = (0..width).filter(|&i| i != y_col).collect();
    let mut dropped_outliers = 0;
    if let Some(q) = opts.outlier_sd {
        let stats: Vec<(f64, f64)> = x_cols.iter().map(|&i| mean_sd(&columns[i])).collect();
        let n = columns[y_col].len();
        let keep: Vec<bool> = (0..n)
            .map(|r| {
                x_cols.iter().zip(&stats).all(|(&i, &(m, sd))| {
                    sd == 0.0 || ((columns[i][r] - m) / sd).abs() <= q
                })
            })
            .collect();
        dropped_outliers = keep.iter().filter(|k| !**k).count();
        for c in &mut columns {
            let mut it = keep.iter();
            c.retain(|_| *it.next().unwrap());
        }
    }

    let n = columns[y_col].len();
    if n < 3 {
        return Err(Error::InsufficientSamples { needed: 3, got: n });
    }
    let train_rows = opts.split.unwrap_or(n);
    if train_rows < 3 || train_rows > n {
        return Err(Error::Config(format!(
            "split {train_rows} must leave at least 3 training rows out of {n}"
        )));
    }

    if opts.standardize {
        for &i in &x_cols {
            let (m, sd) = mean_sd(&columns[i][..train_rows]);
            let scale = if sd > 0.0 { 1.0 / sd } else { 1.0 };
            for v in &mut columns[i] {
                *v = (*v - m) * scale;
            }
        }
    }

    let z_col = match opts.conditional {
        ConditionalSpec::None => None,
        ConditionalSpec::Named(_) => z_named,
        ConditionalSpec::Auto => {
            let y = &columns[y_col][..train_rows];
            let mut best: Option<(usize, f64)> = None;
            for &i in &x_cols {
                let r = pearson(&columns[i][..train_rows], y).abs();
                if best.is_none_or(|(_, b)| r > b) {
                    best = Some((i, r));
                }
            }
            Some(best.ok_or_else(|| Error::Config("no feature columns".into()))?.0)
        }
    };

    let response = std::mem::take(&mut columns[y_col]);
    let conditional = z_col.map(|i| (header[i].clone(), columns[i].clone()));
    let mut names = Vec::new();
    let mut features = Vec::new();
    for &i in &x_cols {
        if Some(i) != z_col {
            names.push(header[i].clone());
            features.push(std::mem::take(&mut columns[i]));
        }
    }
    if opts.interactions {
        let m = features.len();
        for a in 0..m {
            for b in a + 1..m {
                names.push(format!("{}*{}", names[a], names[b]));
                let prod = features[a].iter().zip(&features[b]).map(|(x, y)| x * y).collect();
                features.push(prod);
            }
        }
    }
    Ok(Ingested {
        response,
        conditional,
        features,
        names,
        dropped_nonfinite,
        dropped_outliers,
        train_rows,
    })
}

/// Utilities CSV: one row per feature in rank order.
pub fn utilities_csv(names: &[String], result: &shard::ScreeningResult, unreliable: &[bool]) -> String {
    let mut out = String::from("rank,index,feature,utility,unreliable\n");
    for (r, &j) in result.ranking.iter().enumerate() {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r + 1,
            j + 1,
            names[j],
            result.utilities[j],
            unreliable[j]
        );
    }
    out
}

/// Read a utilities CSV back into feature order: `(names, utilities)`.
pub fn read_utilities_csv(path: &Path) -> Result<(Vec<String>, Vec<f64>)> {
    let mut reader = csv::Reader::from_path(path)?;
    let mut rows: Vec<(usize, String, f64)> = Vec::new();
    for record in reader.records() {
        let record = record?;
        let field = |i: usize| record.get(i).unwrap_or("");
        let bad = || Error::Config(format!("malformed utilities row `{}`", record.iter().collect::<Vec<_>>().join(",")));
        let index: usize = field(1).parse().map_err(|_| bad())?;
        let utility: f64 = field(3).parse().map_err(|_| bad())?;
        if index == 0 {
            return Err(bad());
        }
        rows.push((index - 1, field(2).to_string(), utility));
    }
    rows.sort_by_key(|r| r.0);
    if rows.iter().enumerate().any(|(k, r)| r.0 != k) {
        return Err(Error::Config("utilities file does not cover every feature once".into()));
    }
    Ok(rows.into_iter().map(|(_, n, u)| (n, u)).unzip())
}

fn names_text(names: &[String], idx: &[usize]) -> String {
    idx.iter().map(|&j| format!("{}\n", names[j])).collect()
}

fn ingest_text(ing: &Ingested, opts: &IngestOptions) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "rows_used = {}", ing.train_rows);
    let _ = writeln!(out, "rows_dropped_nonfinite = {}", ing.dropped_nonfinite);
    let _ = writeln!(out, "rows_dropped_outliers = {}", ing.dropped_outliers);
    let _ = writeln!(
        out,
        "outlier_rule = {}",
        opts.outlier_sd.map_or("off".to_string(), |q| format!("|x - mean| > {q} sd"))
    );
    let _ = writeln!(out, "standardize = {}", opts.standardize);
    let _ = writeln!(out, "interactions = {}", opts.interactions);
    let _ = writeln!(
        out,
        "conditional = {}",
        ing.conditional.as_ref().map_or("none", |(n, _)| n.as_str())
    );
    let _ = writeln!(out, "features = {}", ing.names.len());
    out
}

/// Ordinary least squares with intercept. Falls back to a small ridge when
/// the design is rank deficient.
pub fn fit_ols(columns: &[&[f64]], y: &[f64]) -> Result<Vec<f64>> {
    let n = y.len();
    let k = columns.len() + 1;
    let x = DMatrix::from_fn(n, k, |i, j| if j == 0 { 1.0 } else { columns[j - 1][i] });
    let yv = DVector::from_column_slice(y);
    let svd = x.clone().svd(true, true);
    let top = svd.singular_values.max();
    let full_rank = n >= k && svd.singular_values.iter().all(|&s| s > 1e-10 * top.max(1.0));
    let beta = if full_rank {
        svd.solve(&yv, 0.0).map_err(|e| Error::Config(e.to_string()))?
    } else {
        let xt = x.transpose();
        let gram = &xt * &x + DMatrix::<f64>::identity(k, k) * OLS_RIDGE;
        gram.cholesky().ok_or(Error::NearSingularGram)?.solve(&(&xt * &yv))
    };
    Ok(beta.iter().copied().collect())
}

/// `(n⁻¹ Σ (yᵢ − ŷᵢ)²)^{1/2}`.
pub fn rmse(y: &[f64], fitted: &[f64]) -> f64 {
    let n = y.len() as f64;
    (y.iter().zip(fitted).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / n).sqrt()
}

/// Files produced by a command, written only once everything succeeded.
struct Artifacts {
    dir: PathBuf,
    files: Vec<(String, String)>,
}

impl Artifacts {
    fn new(dir: &Path) -> Self {
        Artifacts {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        }
    }

    fn add(&mut self, name: &str, contents: String) {
        self.files.push((name.to_string(), contents));
    }

    fn commit(self) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(&self.dir)?;
        let mut written = Vec::new();
        for (name, contents) in &self.files {
            let path = self.dir.join(name);
            if let Err(e) = fs::write(&path, contents) {
                for p in &written {
                    let _ = fs::remove_file(p);
                }
                return Err(e.into());
            }
            written.push(path);
        }
        Ok(written)
    }
}

fn note(verbose: u8, msg: impl FnOnce() -> String) {
    if verbose > 0 {
        eprintln!("{}", msg());
    }
}

/// Execute one command. Returns the paths written.
pub fn run(cli: Cli) -> Result<Vec<PathBuf>> {
    let v = cli.verbose;
    match cli.command {
        Command::Simulate { config, out, seed } => {
            let mut cfg = SimConfig::load(&config)?;
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            note(v, || format!("simulating {} replications of {}", cfg.reps, cfg.pipeline.label()));
            let report = simulate::run_replications(&cfg)?;
            let mut art = Artifacts::new(&out);
            art.add("replications.csv", report.reps_csv());
            art.add("summary.csv", report.summary_csv());
            art.commit()
        }
        Command::Screen {
            data,
            method,
            shards,
            rule,
            seed,
            out,
        } => {
            let opts = IngestOptions::from_args(&data);
            let ing = ingest_csv(&data.data, &opts)?;
            let ds = ing.training_dataset()?;
            note(v, || format!("screening {} features on {} rows", ds.block.nfeatures(), ds.block.nrows()));
            let shuffle = seed.map_or(Shuffle::Off, Shuffle::Seeded);
            let sharded = shard::shard_dataset(&ds, shards, shuffle)?;
            let utilities = shard::screen(&sharded, method)?;
            let rule = rule.unwrap_or(SelectionRule::TopD(SelectionRule::default_top_d(ds.block.nrows())));
            let result = shard::select(&utilities.values, rule)?;
            let mut art = Artifacts::new(&out);
            art.add("utilities.csv", utilities_csv(&ing.names, &result, &utilities.unreliable));
            art.add("selected.txt", names_text(&ing.names, &result.selected));
            let mut meta = ingest_text(&ing, &opts);
            let _ = writeln!(meta, "method = {method}");
            let _ = writeln!(meta, "shards = {shards}");
            let _ = writeln!(meta, "rule = {rule}");
            let _ = writeln!(meta, "selected = {}", result.selected.len());
            art.add("metadata.txt", meta);
            art.commit()
        }
        Command::Knockoff {
            data,
            method,
            shards,
            alpha,
            d,
            n1,
            n2,
            s,
            seed,
            out,
        } => {
            let opts = IngestOptions::from_args(&data);
            let ing = ingest_csv(&data.data, &opts)?;
            let ds = ing.training_dataset()?;
            let sharded = shard::shard_dataset(&ds, shards, Shuffle::Off)?;
            let n = sharded.shard_sizes().into_iter().min().unwrap_or(0);
            let cfg = knockoff::KnockoffConfig {
                alpha,
                d,
                n1,
                n2: n2.unwrap_or_else(|| knockoff::KnockoffConfig::default_n2(n, d)),
                method,
                s_method: s,
                seed,
            };
            note(v, || format!("two-stage screening with n2 = {} on {} shards", cfg.n2, shards));
            let (sel, audit) = knockoff::run_two_stage(&sharded, &cfg)?;
            let mut art = Artifacts::new(&out);
            art.add("audit.txt", format!("{}{}", ingest_text(&ing, &opts), audit.to_text(&ing.names)));
            art.add("selected.txt", names_text(&ing.names, &sel.selected));
            art.commit()
        }
        Command::Evaluate { data, selected, out } => {
            let opts = IngestOptions::from_args(&data);
            let ing = ingest_csv(&data.data, &opts)?;
            let wanted: Vec<String> = fs::read_to_string(&selected)?
                .lines()
                .map(str::trim)
                .filter(|l| !l.is_empty())
                .map(str::to_string)
                .collect();
            let mut cols: Vec<&[f64]> = Vec::new();
            for name in &wanted {
                let j = ing
                    .names
                    .iter()
                    .position(|n| n == name)
                    .ok_or_else(|| Error::ColumnNotFound(name.clone()))?;
                cols.push(&ing.features[j]);
            }
            if let Some((_, z)) = &ing.conditional {
                cols.push(z);
            }
            let t = ing.train_rows;
            if t == ing.response.len() {
                return Err(Error::Config("evaluate needs --split to leave test rows".into()));
            }
            let train: Vec<&[f64]> = cols.iter().map(|c| &c[..t]).collect();
            let beta = fit_ols(&train, &ing.response[..t])?;
            let fitted: Vec<f64> = (t..ing.response.len())
                .map(|i| beta[0] + cols.iter().zip(&beta[1..]).map(|(c, b)| c[i] * b).sum::<f64>())
                .collect();
            let err = rmse(&ing.response[t..], &fitted);
            let mut text = ingest_text(&ing, &opts);
            let _ = writeln!(text, "selected_features = {}", wanted.len());
            let _ = writeln!(text, "test_rows = {}", ing.response.len() - t);
            let _ = writeln!(text, "test_rmse = {err}");
            let mut art = Artifacts::new(&out);
            art.add("evaluation.txt", text);
            art.commit()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_csv(text: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(text.as_bytes()).unwrap();
        f
    }

    fn opts(conditional: ConditionalSpec) -> IngestOptions {
        IngestOptions {
            response: "y".into(),
            conditional,
            standardize: false,
            interactions: false,
            outlier_sd: None,
            split: None,
        }
    }

    #[test]
    fn standardizes_with_population_scale() {
        let f = write_csv("y,a,b\n1,1,5\n2,2,6\n4,3,9\n");
        let mut o = opts(ConditionalSpec::Named("b".into()));
        o.standardize = true;
        let ing = ingest_csv(f.path(), &o).unwrap();
        let expect = 1.5f64.sqrt();
        assert!((ing.features[0][0] + expect).abs() < 1e-12);
        assert!(ing.features[0][1].abs() < 1e-12);
        assert!((ing.features[0][2] - expect).abs() < 1e-12);
        assert_eq!(ing.response, vec![1.0, 2.0, 4.0]);
    }

    #[test]
    fn standardization_uses_training_rows() {
        let f = write_csv("y,a,b\n1,1,0\n2,3,1\n3,5,0\n4,100,1\n");
        let mut o = opts(ConditionalSpec::Named("b".into()));
        o.standardize = true;
        o.split = Some(3);
        let ing = ingest_csv(f.path(), &o).unwrap();
        // Training mean 3 and sd √(8/3).
        let sd = (8.0f64 / 3.0).sqrt();
        assert!((ing.features[0][3] - 97.0 / sd).abs() < 1e-12);
        assert_eq!(ing.train_rows, 3);
    }

    #[test]
    fn auto_picks_the_most_correlated_feature() {
        let f = write_csv("y,x1,x2,x3\n1,0,1,2\n2,1,2,0\n3,0,3,1\n4,1,4,1\n");
        let ing = ingest_csv(f.path(), &opts(ConditionalSpec::Auto)).unwrap();
        assert_eq!(ing.conditional.as_ref().unwrap().0, "x2");
        assert_eq!(ing.names, vec!["x1", "x3"]);
    }

    #[test]
    fn interactions_expand_pairwise() {
        let f = write_csv("y,a,b,c,z\n1,1,2,3,0\n2,2,3,4,1\n3,3,5,7,0\n");
        let mut o = opts(ConditionalSpec::Named("z".into()));
        o.interactions = true;
        let ing = ingest_csv(f.path(), &o).unwrap();
        assert_eq!(ing.names, vec!["a", "b", "c", "a*b", "a*c", "b*c"]);
        assert_eq!(ing.features[5], vec![6.0, 12.0, 35.0]);
    }

    #[test]
    fn drops_incomplete_rows() {
        let f = write_csv("y,a,z\n1,1,0\n2,,1\n3,NaN,0\n4,2,1\n5,7,1\n6,x,0\n");
        let ing = ingest_csv(f.path(), &opts(ConditionalSpec::Named("z".into()))).unwrap();
        assert_eq!(ing.dropped_nonfinite, 3);
        assert_eq!(ing.response, vec![1.0, 4.0, 5.0]);
    }

    #[test]
    fn outlier_rule_drops_far_rows() {
        let mut text = String::from("y,a,z\n");
        for i in 0..20 {
            text.push_str(&format!("{i},{},{}\n", i % 3, i % 2));
        }
        text.push_str("20,1000,0\n");
        let f = write_csv(&text);
        let mut o = opts(ConditionalSpec::Named("z".into()));
        o.outlier_sd = Some(4.0);
        let ing = ingest_csv(f.path(), &o).unwrap();
        assert_eq!(ing.dropped_outliers, 1);
        assert_eq!(ing.response.len(), 20);
    }

    #[test]
    fn ingest_errors() {
        let f = write_csv("y,a,z\n1,1,0\n2,2,1\n3,3,0\n");
        let mut o = opts(ConditionalSpec::Named("z".into()));
        o.response = "q".into();
        assert!(matches!(ingest_csv(f.path(), &o), Err(Error::ColumnNotFound(c)) if c == "q"));
        let o = opts(ConditionalSpec::Named("w".into()));
        assert!(matches!(ingest_csv(f.path(), &o), Err(Error::ColumnNotFound(_))));
        let f = write_csv("y,a,z\n1,1,0\n2,,1\n3,3,0\n");
        assert!(matches!(
            ingest_csv(f.path(), &opts(ConditionalSpec::Named("z".into()))),
            Err(Error::InsufficientSamples { needed: 3, got: 2 })
        ));
    }

    #[test]
    fn ols_recovers_exact_coefficients() {
        let a = [1.0, 2.0, 3.0, 4.0, 5.0];
        let b = [2.0, 1.0, 0.0, 1.0, 3.0];
        let y: Vec<f64> = a.iter().zip(&b).map(|(x, z)| 1.0 + 2.0 * x - 0.5 * z).collect();
        let beta = fit_ols(&[&a, &b], &y).unwrap();
        for (got, want) in beta.iter().zip([1.0, 2.0, -0.5]) {
            assert!((got - want).abs() < 1e-10);
        }
    }

    #[test]
    fn ols_survives_collinear_columns() {
        let a = [1.0, 2.0, 3.0, 4.0];
        let y = [2.0, 4.0, 6.0, 8.0];
        let beta = fit_ols(&[&a, &a], &y).unwrap();
        let fitted: Vec<f64> = a.iter().map(|x| beta[0] + (beta[1] + beta[2]) * x).collect();
        assert!(rmse(&y, &fitted) < 1e-6);
    }

    #[test]
    fn intercept_only_fit_is_the_mean() {
        let beta = fit_ols(&[], &[1.0, 2.0, 6.0]).unwrap();
        assert!((beta[0] - 3.0).abs() < 1e-12);
    }
}

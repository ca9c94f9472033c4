//! Synthetic AR(1) designs and the replication harness.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Deserializer};

use crate::data::DataBlock;
use crate::error::{Error, Result};
use crate::knockoff::{self, KnockoffConfig, SMethod};
use crate::metrics;
use crate::seed::derive_seed;
use crate::shard::{self, shard_sizes, Method, SelectionRule, ShardedDataset};

const AR_COEF: f64 = 0.5;

fn parsed<'de, D, T>(de: D) -> std::result::Result<T, D::Error>
where
    D: Deserializer<'de>,
    T: FromStr<Err = Error>,
{
    let s = String::deserialize(de)?;
    s.parse().map_err(serde::de::Error::custom)
}

fn parsed_opt<'de, D, T>(de: D) -> std::result::Result<Option<T>, D::Error>
where
    D: Deserializer<'de>,
    T: FromStr<Err = Error>,
{
    Option::<String>::deserialize(de)?
        .map(|s| s.parse().map_err(serde::de::Error::custom))
        .transpose()
}

fn default_s_method() -> SMethod {
    SMethod::Equicorrelated
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
pub enum Model {
    #[serde(alias = "a")]
    A,
    #[serde(alias = "b")]
    B,
}

impl Model {
    /// Important features, 0-based in the full design.
    pub fn important(self) -> Vec<usize> {
        match self {
            Model::A => vec![0, 2, 3, 4, 5, 6, 7, 8],
            Model::B => vec![0, 1, 2, 3, 4],
        }
    }

    fn letter(self) -> char {
        match self {
            Model::A => 'A',
            Model::B => 'B',
        }
    }

    fn min_features(self) -> usize {
        match self {
            Model::A => 9,
            Model::B => 5,
        }
    }
}

/// Procedure applied to each replication.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum Pipeline {
    /// Rank and cut; the default rule keeps `⌊N / ln N⌋` features.
    Screen {
        #[serde(deserialize_with = "parsed")]
        method: Method,
        #[serde(default, deserialize_with = "parsed_opt")]
        rule: Option<SelectionRule>,
    },
    /// Two-stage knockoff screening. By default `d = ⌊n / ln n⌋` for the
    /// shard size `n`, capped so that `2d < n₂`.
    Knockoff {
        #[serde(deserialize_with = "parsed")]
        method: Method,
        alpha: f64,
        #[serde(default)]
        d: Option<usize>,
        #[serde(default)]
        n1: Option<usize>,
        #[serde(default)]
        n2: Option<usize>,
        #[serde(default = "default_s_method", deserialize_with = "parsed")]
        s: SMethod,
    },
}

impl Pipeline {
    pub fn label(&self) -> String {
        match self {
            Pipeline::Screen { method, .. } => method.to_string(),
            Pipeline::Knockoff { method, alpha, .. } => format!("{method}-Kn(alpha={alpha})"),
        }
    }
}

/// Whether the conditional feature counts toward the minimum model size
/// when it is itself important.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MsConvention {
    /// The conditional feature is not screened and not counted.
    #[default]
    ExcludeConditional,
    /// The conditional feature is counted as one extra top-ranked feature.
    CountConditional,
}

impl MsConvention {
    fn name(self) -> &'static str {
        match self {
            MsConvention::ExcludeConditional => "exclude-conditional",
            MsConvention::CountConditional => "count-conditional",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    #[serde(rename = "N")]
    pub n: usize,
    pub p: usize,
    pub c: f64,
    pub model: Model,
    /// 1-based index of the feature used as the conditional variable.
    pub conditional: usize,
    #[serde(rename = "K")]
    pub shards: usize,
    pub reps: usize,
    pub seed: u64,
    #[serde(default)]
    pub ms_convention: MsConvention,
    /// Record wall-clock time per replication; off gives reproducible files.
    #[serde(default = "default_true")]
    pub timing: bool,
    pub pipeline: Pipeline,
}

impl SimConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: SimConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.p < 10 {
            return Err(Error::Config(format!("p = {} but at least 10 features are required", self.p)));
        }
        if self.p < self.model.min_features() {
            return Err(Error::ModelRequiresMoreFeatures {
                model: self.model.letter(),
                needed: self.model.min_features(),
                got: self.p,
            });
        }
        if self.shards == 0 || self.n < 3 * self.shards {
            return Err(Error::TooManyShards {
                shards: self.shards,
                needed: 3 * self.shards,
                rows: self.n,
            });
        }
        if self.reps == 0 {
            return Err(Error::Config("reps must be at least 1".into()));
        }
        if !(1..=self.p).contains(&self.conditional) {
            return Err(Error::Config(format!(
                "conditional index {} outside 1..={}",
                self.conditional, self.p
            )));
        }
        if !self.c.is_finite() {
            return Err(Error::NonFiniteInput);
        }
        Ok(())
    }
}

/// Ground truth in the coordinates of the screened features (the full design
/// without the conditional column).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TruthSet {
    pub important: Vec<usize>,
    /// 0-based column of the conditional variable in the full design.
    pub conditional: usize,
    /// Whether the conditional variable is itself important.
    pub conditional_important: bool,
}

impl TruthSet {
    pub fn new(model: Model, conditional: usize) -> Self {
        let full = model.important();
        TruthSet {
            important: full
                .iter()
                .filter(|&&j| j != conditional)
                .map(|&j| if j > conditional { j - 1 } else { j })
                .collect(),
            conditional,
            conditional_important: full.contains(&conditional),
        }
    }
}

/// `N × p` Gaussian design with `corr(X_i, X_j) = 0.5^{|i−j|}`, column-major.
pub fn sample_ar1_features(n: usize, p: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_ar1_with(n, p, &mut rng)
}

fn sample_ar1_with(n: usize, p: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let innovation = (1.0 - AR_COEF * AR_COEF).sqrt();
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(p);
    for _ in 0..p {
        let col = match cols.last() {
            None => (0..n).map(|_| StandardNormal.sample(rng)).collect(),
            Some(prev) => prev
                .iter()
                .map(|x: &f64| {
                    let e: f64 = StandardNormal.sample(rng);
                    AR_COEF * x + innovation * e
                })
                .collect(),
        };
        cols.push(col);
    }
    cols
}

/// Noise-free part of the response.
pub fn response_signal(features: &[Vec<f64>], model: Model, c: f64) -> Result<Vec<f64>> {
    if features.len() < model.min_features() {
        return Err(Error::ModelRequiresMoreFeatures {
            model: model.letter(),
            needed: model.min_features(),
            got: features.len(),
        });
    }
    let n = features[0].len();
    let x = |j: usize, i: usize| features[j][i];
    Ok((0..n)
        .map(|i| match model {
            Model::A => c * [0, 2, 3, 4, 5, 6, 7, 8].iter().map(|&j| x(j, i)).sum::<f64>(),
            Model::B => {
                let wave = (2.0 * std::f64::consts::PI * x(4, i)).sin();
                c * (2.0 * x(0, i) + 3.0 * x(1, i) + 1.5 * x(2, i) + 2.0 * x(3, i) + 2.0 * wave)
            }
        })
        .collect())
}

/// Response with standard normal noise.
pub fn generate_response(features: &[Vec<f64>], model: Model, c: f64, seed: u64) -> Result<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut y = response_signal(features, model, c)?;
    for v in &mut y {
        let e: f64 = StandardNormal.sample(&mut rng);
        *v += e;
    }
    Ok(y)
}

/// Data for one replication, generated shard by shard so the full design
/// never exists twice in memory.
pub fn replication_data(cfg: &SimConfig, rep: usize) -> Result<(ShardedDataset, TruthSet)> {
    cfg.validate()?;
    let rep_seed = derive_seed(cfg.seed, rep as u64);
    let z = cfg.conditional - 1;
    let mut blocks = Vec::with_capacity(cfg.shards);
    for (k, rows) in shard_sizes(cfg.n, cfg.shards).into_iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(rep_seed, k as u64));
        let mut cols = sample_ar1_with(rows, cfg.p, &mut rng);
        let mut y = response_signal(&cols, cfg.model, cfg.c)?;
        for v in &mut y {
            let e: f64 = StandardNormal.sample(&mut rng);
            *v += e;
        }
        let zcol = cols.remove(z);
        blocks.push(DataBlock::new(y, zcol, cols)?);
    }
    let names = (1..=cfg.p)
        .filter(|&j| j != cfg.conditional)
        .map(|j| format!("X{j}"))
        .collect();
    Ok((ShardedDataset::from_shards(blocks, names)?, TruthSet::new(cfg.model, z)))
}

/// Per-replication outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct RepMetrics {
    pub rep: usize,
    pub ssr: u8,
    pub psr: f64,
    pub fdr: f64,
    pub auc: f64,
    pub ms: usize,
    pub wall_millis: u128,
}

/// Selected set and the utilities used for ranking metrics.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOutcome {
    pub utilities: Vec<f64>,
    pub selected: Vec<usize>,
}

/// Run a pipeline on one sharded dataset; `seed` drives knockoff generation.
pub fn run_pipeline(data: &ShardedDataset, pipeline: &Pipeline, seed: u64) -> Result<PipelineOutcome> {
    match pipeline {
        Pipeline::Screen { method, rule } => {
            let rule = rule.unwrap_or(SelectionRule::TopD(SelectionRule::default_top_d(data.total_rows())));
            let utilities = shard::screen(data, *method)?.values;
            let selected = shard::select(&utilities, rule)?.selected;
            Ok(PipelineOutcome { utilities, selected })
        }
        Pipeline::Knockoff {
            method,
            alpha,
            d,
            n1,
            n2,
            s,
        } => {
            let cfg = knockoff_config(data, *method, *alpha, *d, *n1, *n2, *s, seed)?;
            let (sel, audit) = knockoff::run_two_stage(data, &cfg)?;
            Ok(PipelineOutcome {
                utilities: audit.first_stage_utilities,
                selected: sel.selected,
            })
        }
    }
}

/// Fill in the default `d` and split for the shard size of `data`.
#[allow(clippy::too_many_arguments)]
pub fn knockoff_config(
    data: &ShardedDataset,
    method: Method,
    alpha: f64,
    d: Option<usize>,
    n1: Option<usize>,
    n2: Option<usize>,
    s_method: SMethod,
    seed: u64,
) -> Result<KnockoffConfig> {
    let n = data.shard_sizes().into_iter().min().unwrap_or(0);
    let d = match d {
        Some(d) => d,
        None => {
            let cap = n.saturating_sub(3).saturating_sub(1) / 2;
            SelectionRule::default_top_d(n).min(cap).max(1)
        }
    };
    Ok(KnockoffConfig {
        alpha,
        d,
        n1,
        n2: n2.unwrap_or_else(|| KnockoffConfig::default_n2(n, d)),
        method,
        s_method,
        seed,
    })
}

/// Score a pipeline outcome against the truth.
pub fn score(truth: &TruthSet, outcome: &PipelineOutcome, convention: MsConvention) -> Result<RepMetrics> {
    let mut ms = metrics::minimum_model_size(&truth.important, &outcome.utilities);
    if convention == MsConvention::CountConditional && truth.conditional_important {
        ms += 1;
    }
    Ok(RepMetrics {
        rep: 0,
        ssr: metrics::ssr_indicator(&truth.important, &outcome.selected),
        psr: metrics::psr(&truth.important, &outcome.selected),
        fdr: metrics::fdr_realized(&truth.important, &outcome.selected),
        auc: metrics::auc(&truth.important, &outcome.utilities)?,
        ms,
        wall_millis: 0,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub label: String,
    pub convention: MsConvention,
    pub reps: Vec<RepMetrics>,
}

/// Column summary in the layout of the published tables.
#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub ms_q05: f64,
    pub ms_q50: f64,
    pub ms_q95: f64,
    pub auc: f64,
    pub ssr: f64,
    pub psr: f64,
    pub fdr: f64,
    pub seconds: f64,
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

impl ExperimentReport {
    pub fn summary(&self) -> Summary {
        let n = self.reps.len() as f64;
        let mean = |f: &dyn Fn(&RepMetrics) -> f64| self.reps.iter().map(f).sum::<f64>() / n;
        let mut ms: Vec<f64> = self.reps.iter().map(|r| r.ms as f64).collect();
        ms.sort_by(f64::total_cmp);
        Summary {
            ms_q05: quantile(&ms, 0.05),
            ms_q50: quantile(&ms, 0.5),
            ms_q95: quantile(&ms, 0.95),
            auc: mean(&|r| r.auc),
            ssr: mean(&|r| r.ssr as f64),
            psr: mean(&|r| r.psr),
            fdr: mean(&|r| r.fdr),
            seconds: mean(&|r| r.wall_millis as f64) / 1000.0,
        }
    }

    pub fn reps_csv(&self) -> String {
        let mut out = String::from("rep,SSR,PSR,FDR,AUC,MS,wallMillis\n");
        for r in &self.reps {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.rep + 1,
                r.ssr,
                r.psr,
                r.fdr,
                r.auc,
                r.ms,
                r.wall_millis
            );
        }
        out
    }

    pub fn summary_csv(&self) -> String {
        let s = self.summary();
        format!(
            "method,ms_convention,5%,50%,95%,AUC,SSR,PSR,FDR,Time\n{},{},{},{},{},{:.4},{:.4},{:.4},{:.4},{:.4}\n",
            self.label,
            self.convention.name(),
            s.ms_q05,
            s.ms_q50,
            s.ms_q95,
            s.auc,
            s.ssr,
            s.psr,
            s.fdr,
            s.seconds
        )
    }
}

/// Run every replication of `cfg`. Replications run one after another (each
/// is parallel inside), and each draws from its own derived seed.
pub fn run_replications(cfg: &SimConfig) -> Result<ExperimentReport> {
    run_replications_with(cfg, &cfg.pipeline)
}

pub fn run_replications_with(cfg: &SimConfig, pipeline: &Pipeline) -> Result<ExperimentReport> {
    cfg.validate()?;
    let mut reps = Vec::with_capacity(cfg.reps);
    for rep in 0..cfg.reps {
        let one = || -> Result<RepMetrics> {
            let start = Instant::now();
            let (data, truth) = replication_data(cfg, rep)?;
            let outcome = run_pipeline(&data, pipeline, derive_seed(cfg.seed, rep as u64))?;
            let mut m = score(&truth, &outcome, cfg.ms_convention)?;
            m.rep = rep;
            if cfg.timing {
                m.wall_millis = start.elapsed().as_millis();
            }
            Ok(m)
        };
        reps.push(one().map_err(|e| e.in_replication(rep))?);
    }
    Ok(ExperimentReport {
        label: pipeline.label(),
        convention: cfg.ms_convention,
        reps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cov(a: &[f64], b: &[f64]) -> f64 {
        let n = a.len() as f64;
        let ma = a.iter().sum::<f64>() / n;
        let mb = b.iter().sum::<f64>() / n;
        a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>() / n
    }

    fn small_config(pipeline: Pipeline) -> SimConfig {
        SimConfig {
            n: 600,
            p: 20,
            c: 1.0,
            model: Model::A,
            conditional: 1,
            shards: 3,
            reps: 3,
            seed: 7,
            ms_convention: MsConvention::ExcludeConditional,
            timing: false,
            pipeline,
        }
    }

    #[test]
    fn ar1_covariance_matches_lag_powers() {
        let n = 100_000;
        let x = sample_ar1_features(n, 5, 3);
        let tol = 4.0 / (n as f64).sqrt();
        for j in 0..5 {
            assert!((cov(&x[j], &x[j]) - 1.0).abs() < tol);
        }
        for lag in 1..=3 {
            let c = cov(&x[0], &x[lag]);
            assert!((c - 0.5f64.powi(lag as i32)).abs() < tol, "lag {lag}: {c}");
        }
    }

    #[test]
    fn model_a_signal_sums_eight_terms() {
        let features = vec![vec![1.0]; 12];
        let y = response_signal(&features, Model::A, 0.3).unwrap();
        assert!((y[0] - 2.4).abs() < 1e-15);
    }

    #[test]
    fn model_b_signal_evaluates_the_sine() {
        let mut features = vec![vec![0.0]; 6];
        features[4][0] = 0.25;
        let y = response_signal(&features, Model::B, 0.5).unwrap();
        assert!((y[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn zero_signal_is_pure_noise() {
        let features = sample_ar1_features(50, 10, 1);
        assert!(response_signal(&features, Model::A, 0.0).unwrap().iter().all(|&v| v == 0.0));
        let y = generate_response(&features, Model::A, 0.0, 2).unwrap();
        assert!(y.iter().any(|&v| v != 0.0));
    }

    #[test]
    fn small_designs_are_rejected() {
        let features = sample_ar1_features(5, 8, 1);
        assert!(matches!(
            response_signal(&features, Model::A, 1.0),
            Err(Error::ModelRequiresMoreFeatures { model: 'A', needed: 9, got: 8 })
        ));
        assert!(response_signal(&features, Model::B, 1.0).is_ok());
    }

    #[test]
    fn truth_drops_the_conditional_feature() {
        let t = TruthSet::new(Model::A, 0);
        assert_eq!(t.important, vec![1, 2, 3, 4, 5, 6, 7]);
        assert!(t.conditional_important);
        let t = TruthSet::new(Model::A, 1);
        assert_eq!(t.important, vec![0, 1, 2, 3, 4, 5, 6, 7]);
        assert!(!t.conditional_important);
    }

    #[test]
    fn replication_data_shape() {
        let cfg = small_config(Pipeline::Screen { method: Method::Acps, rule: None });
        let (data, truth) = replication_data(&cfg, 0).unwrap();
        assert_eq!(data.num_shards(), 3);
        assert_eq!(data.nfeatures(), 19);
        assert_eq!(data.total_rows(), 600);
        assert_eq!(data.feature_names()[0], "X2");
        assert_eq!(truth.important.len(), 7);
    }

    #[test]
    fn reports_are_reproducible_and_order_free() {
        let cfg = small_config(Pipeline::Screen { method: Method::Saps, rule: None });
        let a = run_replications(&cfg).unwrap();
        let b = run_replications(&cfg).unwrap();
        assert_eq!(a.reps_csv(), b.reps_csv());
        assert_eq!(a.summary_csv(), b.summary_csv());
        // A single replication run alone matches its entry in the full run.
        let (data, truth) = replication_data(&cfg, 2).unwrap();
        let out = run_pipeline(&data, &cfg.pipeline, derive_seed(cfg.seed, 2)).unwrap();
        let mut m = score(&truth, &out, cfg.ms_convention).unwrap();
        m.rep = 2;
        assert_eq!(m, a.reps[2]);
    }

    #[test]
    fn single_replication_summary_equals_its_metrics() {
        let mut cfg = small_config(Pipeline::Screen { method: Method::Acps, rule: None });
        cfg.reps = 1;
        let r = run_replications(&cfg).unwrap();
        let s = r.summary();
        assert_eq!(s.ms_q05, r.reps[0].ms as f64);
        assert_eq!(s.ms_q95, r.reps[0].ms as f64);
        assert_eq!(s.auc, r.reps[0].auc);
        assert_eq!(s.fdr, r.reps[0].fdr);
    }

    #[test]
    fn count_convention_adds_the_conditional() {
        let mut cfg = small_config(Pipeline::Screen { method: Method::Acps, rule: None });
        cfg.reps = 1;
        let a = run_replications(&cfg).unwrap();
        cfg.ms_convention = MsConvention::CountConditional;
        let b = run_replications(&cfg).unwrap();
        assert_eq!(b.reps[0].ms, a.reps[0].ms + 1);
    }

    #[test]
    fn knockoff_pipeline_runs() {
        let cfg = small_config(Pipeline::Knockoff {
            method: Method::Acps,
            alpha: 0.2,
            d: None,
            n1: None,
            n2: None,
            s: SMethod::Equicorrelated,
        });
        let r = run_replications(&cfg).unwrap();
        assert_eq!(r.reps.len(), 3);
        assert_eq!(r.reps_csv(), run_replications(&cfg).unwrap().reps_csv());
    }

    #[test]
    fn config_from_toml() {
        let text = r#"
N = 600
p = 20
c = 1.0
model = "A"
conditional = 1
K = 3
reps = 2
seed = 5
timing = false

[pipeline]
kind = "knockoff"
method = "jdps"
alpha = 0.2
s = "sdp"
"#;
        let cfg = SimConfig::from_toml(text).unwrap();
        assert_eq!(cfg.shards, 3);
        assert!(matches!(cfg.pipeline, Pipeline::Knockoff { method: Method::Jdps, s: SMethod::Sdp, .. }));
        let bad = text.replace("p = 20", "p = 8");
        assert!(SimConfig::from_toml(&bad).is_err());
        let bad = text.replace("method = \"jdps\"", "method = \"xyz\"");
        assert!(SimConfig::from_toml(&bad).is_err());
    }

    #[test]
    fn quantiles_interpolate() {
        let v: Vec<f64> = (1..=21).map(f64::from).collect();
        assert_eq!(quantile(&v, 0.5), 11.0);
        assert_eq!(quantile(&v, 0.05), 2.0);
        assert_eq!(quantile(&[3.0, 5.0], 0.5), 4.0);
    }
}

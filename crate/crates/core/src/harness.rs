//! Synthetic experiment runner and real-data sweeps.
//!
//! An experiment sweeps one model parameter over a grid; for every grid
//! point it samples `replicates` graphs, runs each method, and records the
//! misclassification rate together with the weak-signal quantity of the
//! adjacency matrix and of the regularized Laplacian.
//!
//! Every replicate draws its randomness from
//! `derive_path(seed, [point, replicate])`, so results do not depend on how
//! the work pool schedules tasks.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{BufRead, Write as _};
use std::path::Path;
use std::sync::Mutex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::baselines::{default_score_threshold, rsc_from_eigensystem, score_from_eigensystem, NEigs};
use crate::clustering::{isc_from_eigensystem, Embedding, IscOptions, KMeansOptions};
use crate::dcsbm::{population_matrices, sample_adjacency, DcsbmParams, MembershipRule, ModelSpec, ThetaRule};
use crate::error::{Error, Result};
use crate::evaluation::{clustering_error, hamming_bound, HammingBound};
use crate::graph::{Graph, LabelVector};
use crate::io_util::write_atomic;
use crate::rng::{derive_path, derive_seed};
use crate::spectral::{
    dense_eigensystem, leading_eigenpairs, weak_signal_quantity, DVariant, EigenOptions, RegularizedLaplacian,
};

/// A clustering method as named in configs and tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Method {
    Isc(DVariant),
    Score(NEigs),
    Rsc(NEigs),
}

impl Method {
    pub fn name(self) -> String {
        match self {
            Method::Isc(DVariant::Midpoint) => "isc".into(),
            Method::Isc(v) => format!("isc_{}", v.name()),
            Method::Score(NEigs::K) => "score".into(),
            Method::Score(NEigs::KPlusOne) => "score_k1".into(),
            Method::Rsc(NEigs::K) => "rsc".into(),
            Method::Rsc(NEigs::KPlusOne) => "rsc_k1".into(),
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "isc" => Method::Isc(DVariant::Midpoint),
            "score" => Method::Score(NEigs::K),
            "score_k1" => Method::Score(NEigs::KPlusOne),
            "rsc" => Method::Rsc(NEigs::K),
            "rsc_k1" => Method::Rsc(NEigs::KPlusOne),
            other => match other.strip_prefix("isc_") {
                Some(v) => Method::Isc(v.parse()?),
                None => return Err(Error::Config(format!("unknown method {other:?}"))),
            },
        })
    }
}

impl TryFrom<String> for Method {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Method> for String {
    fn from(m: Method) -> String {
        m.name()
    }
}

/// The model parameter an experiment varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    /// Number of nodes.
    N,
    /// Ridge multiplier.
    Delta,
    /// Two communities with `theta = 1 - x` and `theta = x`.
    #[serde(alias = "a0")]
    ThetaContrast,
    /// Every off-diagonal entry of `P` set to `x`.
    #[serde(alias = "b0")]
    OffDiagonal,
    /// Size of community 2 relative to community 1 (`n_1 = round(n / (x + 1))`).
    #[serde(alias = "c0")]
    SizeRatio,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub param: SweepParam,
    pub values: Vec<f64>,
}

fn default_replicates() -> usize {
    50
}

fn default_restarts() -> usize {
    50
}

fn default_methods() -> Vec<Method> {
    ["isc", "score", "score_k1", "rsc", "rsc_k1"]
        .iter()
        .map(|m| m.parse().unwrap())
        .collect()
}

/// Experiment description, usually read from a TOML file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub model: ModelSpec,
    pub sweep: Sweep,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_restarts")]
    pub restarts: usize,
    /// Also evaluate the Hamming error bounds for ISC (needs a population
    /// eigendecomposition per replicate).
    #[serde(default)]
    pub bounds: bool,
}

const BUILTIN: [(&str, &str); 8] = [
    ("exp1a", include_str!("../configs/exp1a.toml")),
    ("exp1b", include_str!("../configs/exp1b.toml")),
    ("exp2a", include_str!("../configs/exp2a.toml")),
    ("exp2b", include_str!("../configs/exp2b.toml")),
    ("exp2c", include_str!("../configs/exp2c.toml")),
    ("exp2d", include_str!("../configs/exp2d.toml")),
    ("exp2e", include_str!("../configs/exp2e.toml")),
    ("exp2f", include_str!("../configs/exp2f.toml")),
];

pub fn builtin_names() -> Vec<&'static str> {
    BUILTIN.iter().map(|(n, _)| *n).collect()
}

/// One of the shipped experiment configs.
pub fn builtin(name: &str) -> Option<ExperimentConfig> {
    BUILTIN
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| ExperimentConfig::from_toml(text).expect("shipped configs parse"))
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&crate::io_util::read_to_string(path)?)
    }

    /// The model at sweep value `x`.
    pub fn model_at(&self, x: f64) -> Result<ModelSpec> {
        let mut m = self.model.clone();
        match self.sweep.param {
            SweepParam::N => {
                if !(x >= 1.0 && x.fract() == 0.0) {
                    return Err(Error::Config(format!("n must be a positive integer, got {x}")));
                }
                m.n = x as usize;
            }
            SweepParam::Delta => m.delta = x,
            SweepParam::ThetaContrast => {
                if m.k != 2 {
                    return Err(Error::Config("theta_contrast sweeps need K = 2".into()));
                }
                m.theta = ThetaRule::PerCommunity {
                    values: vec![1.0 - x, x],
                };
            }
            SweepParam::OffDiagonal => {
                for a in 0..m.k {
                    for b in 0..m.k {
                        if a != b {
                            m.p[a * m.k + b] = x;
                        }
                    }
                }
            }
            SweepParam::SizeRatio => m.membership = MembershipRule::SizeRatio { c0: x },
        }
        Ok(m)
    }

    /// Checks every sweep point before any work starts.
    pub fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::Config("replicates must be >= 1".into()));
        }
        if self.restarts == 0 {
            return Err(Error::Config("restarts must be >= 1".into()));
        }
        for &x in &self.sweep.values {
            self.model_at(x)?
                .validate()
                .map_err(|e| Error::Config(format!("sweep value {x}: {e}")))?;
        }
        Ok(())
    }

    /// Stable identifier of the config contents (hex SHA-256 prefix).
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        let digest = Sha256::digest(&json);
        digest.iter().take(8).fold(String::new(), |mut s, b| {
            write!(s, "{b:02x}").unwrap();
            s
        })
    }
}

/// Result of one method on one replicate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodResult {
    pub method: Method,
    pub errors: Option<usize>,
    pub rate: Option<f64>,
    pub bounds: Option<HammingBound>,
    pub failure: Option<String>,
}

/// Everything recorded for one sampled graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateRecord {
    pub point: usize,
    pub x: f64,
    pub replicate: usize,
    pub seed: u64,
    pub n: usize,
    pub weak_signal_a: Option<f64>,
    pub weak_signal_l: Option<f64>,
    pub methods: Vec<MethodResult>,
}

/// Mean and standard error over replicates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub stderr: f64,
    pub count: usize,
}

impl Stat {
    pub fn of(values: &[f64]) -> Option<Stat> {
        let m = values.len();
        if m == 0 {
            return None;
        }
        let mean = values.iter().sum::<f64>() / m as f64;
        let stderr = if m > 1 {
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1) as f64;
            (var / m as f64).sqrt()
        } else {
            0.0
        };
        Some(Stat { mean, stderr, count: m })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointSummary {
    pub x: f64,
    pub rates: BTreeMap<String, Stat>,
    pub failures: BTreeMap<String, usize>,
    pub weak_signal_a: Option<Stat>,
    pub weak_signal_l: Option<Stat>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub config_hash: String,
    /// Ordered by (point, replicate).
    pub records: Vec<ReplicateRecord>,
    pub summary: Vec<PointSummary>,
}

impl ExperimentResult {
    pub fn point(&self, x: f64) -> Option<&PointSummary> {
        self.summary.iter().find(|p| p.x == x)
    }

    pub fn mean_rate(&self, x: f64, method: &str) -> Option<f64> {
        self.point(x)?.rates.get(method).map(|s| s.mean)
    }
}

fn task_seed(cfg: &ExperimentConfig, point: usize, replicate: usize) -> u64 {
    derive_path(cfg.seed, &[point as u64, replicate as u64])
}

/// Samples and evaluates one replicate.
pub fn run_replicate(cfg: &ExperimentConfig, point: usize, replicate: usize) -> Result<ReplicateRecord> {
    let x = cfg.sweep.values[point];
    let model = cfg.model_at(x)?;
    let seed = task_seed(cfg, point, replicate);
    let params = model.realize(derive_seed(seed, 0))?;
    let g = sample_adjacency(&params, derive_seed(seed, 1));
    let kmeans = KMeansOptions {
        restarts: cfg.restarts,
        max_iter: 300,
        seed: derive_seed(seed, 2),
    };
    let eigen = EigenOptions {
        seed: derive_seed(seed, 3),
        ..EigenOptions::default()
    };
    let truth = params.labels();
    let k = params.k();
    let n = params.n();

    let adjacency_es = leading_eigenpairs(&g, (k + 1).min(n), &eigen);
    let weak_signal_a = adjacency_es
        .as_ref()
        .ok()
        .and_then(|es| weak_signal_quantity(es, k).ok());
    let isc_es = RegularizedLaplacian::new(&g, model.delta, DVariant::Midpoint)
        .and_then(|l| leading_eigenpairs(&l, k + 1, &eigen));
    let weak_signal_l = isc_es.as_ref().ok().and_then(|es| weak_signal_quantity(es, k).ok());

    let mut methods = Vec::with_capacity(cfg.methods.len());
    for &method in &cfg.methods {
        let outcome: Result<(Vec<usize>, Option<HammingBound>)> = (|| match method {
            Method::Isc(DVariant::Midpoint) => {
                let es = isc_es.as_ref().map_err(clone_err)?;
                let (emb, part) = isc_from_eigensystem(es, k, &kmeans)?;
                let bounds = if cfg.bounds {
                    let m = emb.shortest_row().min(population_shortest_row(&params, model.delta)?);
                    Some(hamming_bound(es, k, n, m)?)
                } else {
                    None
                };
                Ok((part.labels, bounds))
            }
            Method::Isc(variant) => {
                let lap = RegularizedLaplacian::new(&g, model.delta, variant)?;
                let es = leading_eigenpairs(&lap, k + 1, &eigen)?;
                Ok((isc_from_eigensystem(&es, k, &kmeans)?.1.labels, None))
            }
            Method::Score(ne) => {
                let es = adjacency_es.as_ref().map_err(clone_err)?;
                let (part, _) = score_from_eigensystem(es, k, ne, default_score_threshold(n), &kmeans)?;
                Ok((part.labels, None))
            }
            Method::Rsc(ne) => {
                let lap = RegularizedLaplacian::with_tau(&g, None)?;
                let es = leading_eigenpairs(&lap, ne.count(k), &eigen)?;
                Ok((rsc_from_eigensystem(&es, k, ne, &kmeans)?.labels, None))
            }
        })();
        methods.push(
            match outcome.and_then(|(labels, b)| Ok((clustering_error(&labels, &truth)?, b))) {
                Ok((err, bounds)) => MethodResult {
                    method,
                    errors: Some(err.mismatches),
                    rate: Some(err.rate),
                    bounds,
                    failure: None,
                },
                Err(e) => MethodResult {
                    method,
                    errors: None,
                    rate: None,
                    bounds: None,
                    failure: Some(e.to_string()),
                },
            },
        );
    }
    Ok(ReplicateRecord {
        point,
        x,
        replicate,
        seed,
        n,
        weak_signal_a,
        weak_signal_l,
        methods,
    })
}

/// Rebuilds an error stored for a shared eigensystem so each method that
/// depends on it can report it.
fn clone_err(e: &Error) -> Error {
    match e {
        Error::Singular { node, degree } => Error::Singular {
            node: *node,
            degree: *degree,
        },
        Error::UndefinedRatio(v) => Error::UndefinedRatio(*v),
        Error::Numerical {
            iterations,
            residual,
            message,
        } => Error::Numerical {
            iterations: *iterations,
            residual: *residual,
            message: message.clone(),
        },
        Error::Dimension(m) => Error::Dimension(m.clone()),
        Error::Parameter(m) => Error::Parameter(m.clone()),
        other => Error::Parameter(other.to_string()),
    }
}

/// Shortest row of the population embedding `X`.
fn population_shortest_row(params: &DcsbmParams, delta: f64) -> Result<f64> {
    let pop = population_matrices(params, delta)?;
    let es = dense_eigensystem(&pop.laplacian).truncate(params.k() + 1);
    Ok(Embedding::weighted(&es, params.k())?.shortest_row())
}

fn summarize(cfg: &ExperimentConfig, records: &[ReplicateRecord]) -> Vec<PointSummary> {
    cfg.sweep
        .values
        .iter()
        .enumerate()
        .map(|(point, &x)| {
            let recs: Vec<&ReplicateRecord> = records.iter().filter(|r| r.point == point).collect();
            let mut rates = BTreeMap::new();
            let mut failures = BTreeMap::new();
            for &method in &cfg.methods {
                let vals: Vec<f64> = recs
                    .iter()
                    .flat_map(|r| r.methods.iter().filter(|m| m.method == method).filter_map(|m| m.rate))
                    .collect();
                let failed = recs
                    .iter()
                    .flat_map(|r| r.methods.iter().filter(|m| m.method == method && m.failure.is_some()))
                    .count();
                if let Some(s) = Stat::of(&vals) {
                    rates.insert(method.name(), s);
                }
                failures.insert(method.name(), failed);
            }
            let wa: Vec<f64> = recs.iter().filter_map(|r| r.weak_signal_a).collect();
            let wl: Vec<f64> = recs.iter().filter_map(|r| r.weak_signal_l).collect();
            PointSummary {
                x,
                rates,
                failures,
                weak_signal_a: Stat::of(&wa),
                weak_signal_l: Stat::of(&wl),
            }
        })
        .collect()
}

/// Runs every (sweep point, replicate) task on the rayon pool.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    run_experiment_inner(cfg, BTreeMap::new(), |_| Ok(()))
}

fn run_experiment_inner(
    cfg: &ExperimentConfig,
    mut done: BTreeMap<(usize, usize), ReplicateRecord>,
    on_record: impl Fn(&ReplicateRecord) -> Result<()> + Sync,
) -> Result<ExperimentResult> {
    cfg.validate()?;
    let tasks: Vec<(usize, usize)> = (0..cfg.sweep.values.len())
        .flat_map(|p| (0..cfg.replicates).map(move |r| (p, r)))
        .filter(|key| !done.contains_key(key))
        .collect();
    let fresh: Vec<ReplicateRecord> = tasks
        .par_iter()
        .map(|&(p, r)| {
            let rec = run_replicate(cfg, p, r)?;
            on_record(&rec)?;
            Ok(rec)
        })
        .collect::<Result<_>>()?;
    for rec in fresh {
        done.insert((rec.point, rec.replicate), rec);
    }
    let records: Vec<ReplicateRecord> = done
        .into_values()
        .filter(|r| r.point < cfg.sweep.values.len() && r.replicate < cfg.replicates)
        .collect();
    let summary = summarize(cfg, &records);
    Ok(ExperimentResult {
        config: cfg.clone(),
        config_hash: cfg.hash(),
        records,
        summary,
    })
}

#[derive(Debug, Serialize, Deserialize)]
struct LedgerLine {
    config_hash: String,
    seed: u64,
    record: ReplicateRecord,
}

/// Like [`run_experiment`] but backed by an append-only NDJSON ledger:
/// replicates already recorded under the same config hash and seed are
/// reused, new ones are appended as they finish.
pub fn run_experiment_with_ledger(cfg: &ExperimentConfig, ledger: &Path) -> Result<ExperimentResult> {
    let hash = cfg.hash();
    let mut done = BTreeMap::new();
    if ledger.exists() {
        let file = std::fs::File::open(ledger).map_err(|e| Error::io(ledger, e))?;
        for (lineno, line) in std::io::BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(ledger, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let entry: LedgerLine =
                serde_json::from_str(&line).map_err(|e| Error::parse(ledger, lineno + 1, e.to_string()))?;
            if entry.config_hash == hash && entry.seed == cfg.seed {
                done.insert((entry.record.point, entry.record.replicate), entry.record);
            }
        }
    }
    if let Some(dir) = ledger.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let file = std::fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(ledger)
        .map_err(|e| Error::io(ledger, e))?;
    let file = Mutex::new(file);
    run_experiment_inner(cfg, done, |rec| {
        let line = serde_json::to_string(&LedgerLine {
            config_hash: hash.clone(),
            seed: cfg.seed,
            record: rec.clone(),
        })
        .expect("record serializes");
        let mut f = file.lock().unwrap();
        writeln!(f, "{line}").map_err(|e| Error::io(ledger, e))
    })
}

fn opt<T: std::fmt::Display>(v: Option<T>) -> String {
    v.map_or_else(|| "NA".to_string(), |v| v.to_string())
}

/// Per-replicate rows: one line per (replicate, method).
pub fn rows_tsv(result: &ExperimentResult) -> String {
    let mut s = String::from("x\treplicate\tmethod\terrors\tn\trate\tweak_signal_a\tweak_signal_l\tstatus\n");
    for r in &result.records {
        for m in &r.methods {
            writeln!(
                s,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                r.x,
                r.replicate,
                m.method.name(),
                opt(m.errors),
                r.n,
                opt(m.rate),
                opt(r.weak_signal_a),
                opt(r.weak_signal_l),
                m.failure
                    .as_deref()
                    .map_or("ok".to_string(), |f| format!("failed: {f}")),
            )
            .unwrap();
        }
    }
    s
}

/// Per-point means: one line per (sweep value, method).
pub fn summary_tsv(result: &ExperimentResult) -> String {
    let mut s = String::from("x\tmethod\tmean_rate\tstderr\tok\tfailed\n");
    for p in &result.summary {
        for m in &result.config.methods {
            let name = m.name();
            let stat = p.rates.get(&name);
            writeln!(
                s,
                "{}\t{}\t{}\t{}\t{}\t{}",
                p.x,
                name,
                opt(stat.map(|s| s.mean)),
                opt(stat.map(|s| s.stderr)),
                stat.map_or(0, |s| s.count),
                p.failures.get(&name).copied().unwrap_or(0)
            )
            .unwrap();
        }
    }
    s
}

fn series(points: impl Iterator<Item = (f64, Option<Stat>)>) -> String {
    let mut s = String::from("x\tmean\tstderr\n");
    for (x, stat) in points {
        writeln!(s, "{x}\t{}\t{}", opt(stat.map(|s| s.mean)), opt(stat.map(|s| s.stderr))).unwrap();
    }
    s
}

/// Writes `rows.tsv`, `summary.tsv`, `summary.json` and plot-ready
/// `series_<name>.tsv` files (one per method plus the two weak-signal series).
pub fn write_outputs(result: &ExperimentResult, dir: &Path) -> Result<Vec<std::path::PathBuf>> {
    let mut files: Vec<(String, String)> = vec![
        ("rows.tsv".into(), rows_tsv(result)),
        ("summary.tsv".into(), summary_tsv(result)),
        (
            "summary.json".into(),
            serde_json::to_string_pretty(&SummaryDoc {
                config: &result.config,
                config_hash: &result.config_hash,
                summary: &result.summary,
            })
            .expect("summary serializes"),
        ),
    ];
    for m in &result.config.methods {
        let name = m.name();
        files.push((
            format!("series_{name}.tsv"),
            series(result.summary.iter().map(|p| (p.x, p.rates.get(&name).copied()))),
        ));
    }
    files.push((
        "series_weak_signal_a.tsv".into(),
        series(result.summary.iter().map(|p| (p.x, p.weak_signal_a))),
    ));
    files.push((
        "series_weak_signal_l.tsv".into(),
        series(result.summary.iter().map(|p| (p.x, p.weak_signal_l))),
    ));
    let mut written = Vec::new();
    for (name, text) in files {
        let path = dir.join(name);
        write_atomic(&path, text.as_bytes())?;
        written.push(path);
    }
    Ok(written)
}

#[derive(Serialize)]
struct SummaryDoc<'a> {
    config: &'a ExperimentConfig,
    config_hash: &'a str,
    summary: &'a [PointSummary],
}

/// One row of a regularization sweep on a fixed graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub label: String,
    pub delta: f64,
    pub d_used: Option<f64>,
    pub errors: Option<usize>,
    pub rate: Option<f64>,
    pub failure: Option<String>,
}

fn isc_row(
    g: &Graph,
    truth: &LabelVector,
    k: usize,
    delta: f64,
    variant: DVariant,
    seed: u64,
    label: String,
) -> SweepRow {
    let opts = IscOptions {
        delta,
        variant,
        ..IscOptions::with_seed(seed)
    };
    let run = crate::clustering::isc_cluster(g, k, &opts)
        .and_then(|out| Ok((out.ridge, clustering_error(&out.partition.labels, truth)?)));
    match run {
        Ok((ridge, err)) => SweepRow {
            label,
            delta,
            d_used: match ridge {
                crate::spectral::Ridge::Scaled { d, .. } => Some(d),
                crate::spectral::Ridge::Explicit { tau } => Some(tau),
            },
            errors: Some(err.mismatches),
            rate: Some(err.rate),
            failure: None,
        },
        Err(e) => SweepRow {
            label,
            delta,
            d_used: None,
            errors: None,
            rate: None,
            failure: Some(e.to_string()),
        },
    }
}

/// ISC mismatch counts for each `delta`. Failures (e.g. a singular degree
/// matrix at `delta = 0`) become rows with `failure` set.
pub fn run_delta_sweep(g: &Graph, truth: &LabelVector, k: usize, deltas: &[f64], seed: u64) -> Result<Vec<SweepRow>> {
    if truth.len() != g.n() {
        return Err(Error::Dimension(format!("{} labels for {} nodes", truth.len(), g.n())));
    }
    if let Some(d) = deltas.iter().find(|d| !(**d >= 0.0)) {
        return Err(Error::Parameter(format!("delta must be >= 0, got {d}")));
    }
    Ok(deltas
        .par_iter()
        .map(|&delta| isc_row(g, truth, k, delta, DVariant::Midpoint, seed, format!("{delta}")))
        .collect())
}

/// ISC at `delta = 0.1` with each choice of the regularization scale.
pub fn run_d_variant_table(g: &Graph, truth: &LabelVector, k: usize, seed: u64) -> Result<Vec<SweepRow>> {
    if truth.len() != g.n() {
        return Err(Error::Dimension(format!("{} labels for {} nodes", truth.len(), g.n())));
    }
    Ok(DVariant::ALL
        .par_iter()
        .map(|&v| isc_row(g, truth, k, 0.1, v, seed, v.name().to_string()))
        .collect())
}

pub fn sweep_tsv(rows: &[SweepRow], n: usize) -> String {
    let mut s = String::from("setting\tdelta\td\terrors\tn\trate\tstatus\n");
    for r in rows {
        writeln!(
            s,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}",
            r.label,
            r.delta,
            opt(r.d_used),
            opt(r.errors),
            n,
            opt(r.rate),
            r.failure
                .as_deref()
                .map_or("ok".to_string(), |f| format!("failed: {f}")),
        )
        .unwrap();
    }
    s
}

/// The grid `{0, 0.025, ..., 0.2}`.
pub fn default_delta_grid() -> Vec<f64> {
    (0..=8).map(|i| (i * 25) as f64 / 1000.0).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(param: SweepParam, values: Vec<f64>) -> ExperimentConfig {
        let mut cfg = builtin("exp1a").unwrap();
        cfg.model.n = 60;
        cfg.sweep = Sweep { param, values };
        cfg.replicates = 2;
        cfg.restarts = 5;
        cfg
    }

    #[test]
    fn builtins_parse_and_validate() {
        for name in builtin_names() {
            let cfg = builtin(name).unwrap();
            assert_eq!(cfg.name, name);
            cfg.validate().unwrap();
        }
        assert_eq!(builtin("exp1a").unwrap().sweep.values.len(), 10);
        assert_eq!(builtin("exp2d").unwrap().sweep.values.len(), 9);
        assert!(builtin("exp9").is_none());
    }

    #[test]
    fn method_names_round_trip() {
        for name in [
            "isc", "isc_dmax", "isc_dmin", "isc_dbar", "score", "score_k1", "rsc", "rsc_k1",
        ] {
            assert_eq!(name.parse::<Method>().unwrap().name(), name);
        }
        assert!("occam".parse::<Method>().is_err());
    }

    #[test]
    fn sweep_substitution() {
        let cfg = builtin("exp2a").unwrap();
        assert_eq!(
            cfg.model_at(0.3).unwrap().theta,
            ThetaRule::PerCommunity { values: vec![0.7, 0.3] }
        );
        let cfg = builtin("exp2b").unwrap();
        assert_eq!(cfg.model_at(0.25).unwrap().p, vec![0.5, 0.25, 0.25, 0.5]);
        let cfg = builtin("exp2d").unwrap();
        assert_eq!(
            cfg.model_at(4.0).unwrap().membership,
            MembershipRule::SizeRatio { c0: 4.0 }
        );
    }

    #[test]
    fn minimal_run_has_one_row() {
        let mut cfg = tiny(SweepParam::N, vec![50.0]);
        cfg.replicates = 1;
        cfg.methods = vec![Method::Isc(DVariant::Midpoint)];
        let res = run_experiment(&cfg).unwrap();
        assert_eq!(res.records.len(), 1);
        assert_eq!(rows_tsv(&res).lines().count(), 2);
    }

    #[test]
    fn invalid_sweep_value_is_rejected_eagerly() {
        let cfg = tiny(SweepParam::ThetaContrast, vec![0.3, 1.5]);
        assert!(matches!(run_experiment(&cfg), Err(Error::Config(_))));
    }

    #[test]
    fn means_recompute_from_rows() {
        let cfg = tiny(SweepParam::N, vec![40.0, 60.0]);
        let res = run_experiment(&cfg).unwrap();
        for (point, summary) in res.summary.iter().enumerate() {
            for m in &cfg.methods {
                let vals: Vec<f64> = res
                    .records
                    .iter()
                    .filter(|r| r.point == point)
                    .flat_map(|r| r.methods.iter().filter(|x| x.method == *m).filter_map(|x| x.rate))
                    .collect();
                let mean = vals.iter().sum::<f64>() / vals.len() as f64;
                assert_eq!(summary.rates[&m.name()].mean, mean);
            }
        }
    }

    #[test]
    fn ledger_resume_matches_fresh_run() {
        let dir = tempfile::tempdir().unwrap();
        let ledger = dir.path().join("runs.ndjson");
        let mut cfg = tiny(SweepParam::N, vec![40.0, 50.0]);
        let fresh = run_experiment(&cfg).unwrap();
        // A partial run first, then the full one on the same ledger.
        cfg.replicates = 1;
        let partial = run_experiment_with_ledger(&cfg, &ledger).unwrap();
        assert_eq!(partial.records.len(), 2);
        cfg.replicates = 2;
        let resumed = run_experiment_with_ledger(&cfg, &ledger).unwrap();
        assert_eq!(resumed.records, fresh.records);
        // The changed replicate count changes the hash, so nothing was reused.
        let lines = std::fs::read_to_string(&ledger).unwrap().lines().count();
        assert_eq!(lines, 2 + 4);
        let again = run_experiment_with_ledger(&cfg, &ledger).unwrap();
        assert_eq!(again.records, fresh.records);
        assert_eq!(std::fs::read_to_string(&ledger).unwrap().lines().count(), 6);
    }

    #[test]
    fn empty_delta_list_gives_empty_table() {
        let g = Graph::from_edges(3, [(0, 1), (1, 2)]).unwrap();
        let truth = LabelVector::new(vec![0, 0, 1]).unwrap();
        assert!(run_delta_sweep(&g, &truth, 2, &[], 0).unwrap().is_empty());
    }

    #[test]
    fn zero_delta_with_isolated_node_is_a_failed_row() {
        let g = Graph::from_edges(5, [(0, 1), (1, 2), (2, 3)]).unwrap();
        let truth = LabelVector::new(vec![0, 0, 1, 1, 1]).unwrap();
        let rows = run_delta_sweep(&g, &truth, 2, &[0.0, 0.1], 0).unwrap();
        assert!(rows[0].failure.as_deref().unwrap().contains("singular"));
        assert!(rows[1].failure.is_none());
    }

    #[test]
    fn regular_graph_variants_agree() {
        // A cycle: every degree is 2, so every variant picks d = 2.
        let n = 12;
        let g = Graph::from_edges(n, (0..n).map(|i| (i, (i + 1) % n)).collect::<Vec<_>>()).unwrap();
        let truth = LabelVector::new((0..n).map(|i| i / 6).collect()).unwrap();
        let rows = run_d_variant_table(&g, &truth, 2, 9).unwrap();
        assert!(rows.iter().all(|r| r.errors == rows[0].errors && r.d_used == Some(2.0)));
    }
}

//! The `isc` command-line front end.
//!
//! Exit status: 0 on success, 2 for bad flags or invalid configs, 3 for
//! unreadable or malformed input files, 4 when a numerical step fails.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::baselines::{rsc_cluster, score_cluster, NEigs, RscOptions, ScoreOptions};
use crate::clustering::{isc_cluster, IscOptions, KMeansOptions, Partition};
use crate::datasets::{self, Dataset};
use crate::dcsbm::{sample_adjacency, ModelSpec};
use crate::error::{Error, Result};
use crate::evaluation::{clustering_error, Report};
use crate::graph::{edge_list_text, load_edge_list, load_labels, load_labels_for, Graph, Indexing};
use crate::harness::{self, ExperimentConfig};
use crate::io_util::{read_to_string, write_atomic};
use crate::spectral::{
    is_weak_signal, leading_eigenpairs, weak_signal_quantity, DVariant, EigenOptions, EigenSystem,
    RegularizedLaplacian, Ridge,
};

#[derive(Debug, Parser)]
#[command(
    name = "isc",
    version,
    about = "Regularized spectral clustering for degree-corrected block models"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Cluster a graph and write a label file plus a `.meta.json` sidecar.
    Cluster(ClusterArgs),
    /// Sample a graph from a block model config.
    Generate(GenerateArgs),
    /// Compare a predicted labeling with the truth.
    Eval(EvalArgs),
    /// Run a synthetic experiment (built-in or from a config file).
    Experiment(ExperimentArgs),
    /// ISC error over a grid of ridge multipliers.
    SweepDelta(SweepDeltaArgs),
    /// ISC error for each choice of the regularization scale.
    DVariants(DVariantArgs),
    /// Download or copy dataset files into the data directory.
    Fetch(FetchArgs),
    /// Print the leading eigenvalues and the weak-signal quantity.
    Spectrum(SpectrumArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Isc,
    Score,
    Rsc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OperatorArg {
    Laplacian,
    Adjacency,
}

/// Where the graph (and possibly its labels) come from.
#[derive(Debug, Args)]
pub struct GraphSource {
    /// Edge list file.
    #[arg(long, conflicts_with = "dataset", required_unless_present = "dataset")]
    pub edges: Option<PathBuf>,
    /// Dataset name looked up in the data directory.
    #[arg(long)]
    pub dataset: Option<String>,
    /// Data directory (defaults to $ISC_DATA_DIR).
    #[arg(long)]
    pub data_dir: Option<PathBuf>,
    /// Node ids in the edge list start at 1.
    #[arg(long)]
    pub one_based: bool,
    /// Keep only the largest connected component.
    #[arg(long)]
    pub lcc: bool,
}

impl GraphSource {
    fn indexing(&self) -> Indexing {
        if self.one_based {
            Indexing::OneBased
        } else {
            Indexing::ZeroBased
        }
    }

    fn data_dir(&self) -> Result<PathBuf> {
        self.data_dir
            .clone()
            .or_else(datasets::data_dir)
            .ok_or_else(|| Error::Config(format!("--dataset needs --data-dir or ${}", datasets::DATA_DIR_ENV)))
    }

    fn label(&self) -> String {
        match (&self.dataset, &self.edges) {
            (Some(name), _) => name.clone(),
            (None, Some(p)) => p.display().to_string(),
            (None, None) => String::new(),
        }
    }

    fn raw_graph(&self) -> Result<Graph> {
        match (&self.dataset, &self.edges) {
            (Some(name), _) => load_edge_list(&datasets::edges_path(&self.data_dir()?, name), self.indexing()),
            (None, Some(p)) => load_edge_list(p, self.indexing()),
            (None, None) => unreachable!("clap requires one source"),
        }
    }

    /// Loads the graph alone, plus the kept node indices when `--lcc` is set.
    fn graph(&self) -> Result<(Graph, Option<Vec<usize>>)> {
        let g = self.raw_graph()?;
        Ok(if self.lcc {
            let (g, nodes) = g.largest_component();
            (g, Some(nodes))
        } else {
            (g, None)
        })
    }

    /// Loads graph and labels; `labels` overrides the dataset's label file.
    fn labeled(&self, labels: Option<&Path>) -> Result<Dataset> {
        let g = self.raw_graph()?;
        let label_path = match (labels, &self.dataset) {
            (Some(p), _) => p.to_path_buf(),
            (None, Some(name)) => datasets::labels_path(&self.data_dir()?, name),
            (None, None) => return Err(Error::Config("--labels is required with --edges".into())),
        };
        let ds = Dataset {
            name: self.label(),
            labels: load_labels_for(&label_path, g.n())?,
            graph: g,
        };
        Ok(if self.lcc { ds.largest_component() } else { ds })
    }
}

#[derive(Debug, Args)]
pub struct ClusterArgs {
    #[command(flatten)]
    pub source: GraphSource,
    /// Number of communities.
    #[arg(long)]
    pub k: usize,
    #[arg(long, value_enum, default_value = "isc")]
    pub method: MethodArg,
    /// Ridge multiplier for ISC.
    #[arg(long, default_value_t = 0.1)]
    pub delta: f64,
    #[arg(long, default_value = "midpoint")]
    pub d_variant: DVariant,
    /// Eigenvectors used by the baselines: K or K+1.
    #[arg(long, default_value = "K")]
    pub n_eigs: NEigs,
    /// RSC ridge (default: mean degree).
    #[arg(long)]
    pub tau: Option<f64>,
    /// SCORE ratio clipping threshold (default: ln n).
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 50)]
    pub restarts: usize,
    /// Label file to write (default: `<edges>.<method>.labels`).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Model config (TOML); an experiment config also works.
    #[arg(long, conflicts_with = "name", required_unless_present = "name")]
    pub config: Option<PathBuf>,
    /// Built-in experiment whose base model to sample.
    #[arg(long)]
    pub name: Option<String>,
    /// Override the number of nodes.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Writes `<prefix>.edges`, `<prefix>.labels` and `<prefix>.meta.json`.
    #[arg(long)]
    pub out_prefix: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub pred: PathBuf,
    #[arg(long)]
    pub truth: PathBuf,
    /// Write a JSON report here.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    /// Built-in experiment name.
    #[arg(long, conflicts_with = "config", required_unless_present = "config")]
    pub name: Option<String>,
    /// Experiment config file (TOML).
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub replicates: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub restarts: Option<usize>,
    /// Output directory (default: `results/<name>`).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Append-only run ledger; completed replicates are reused.
    #[arg(long)]
    pub ledger: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepDeltaArgs {
    #[command(flatten)]
    pub source: GraphSource,
    /// Ground-truth labels (default: the dataset's label file).
    #[arg(long)]
    pub labels: Option<PathBuf>,
    #[arg(long)]
    pub k: Option<usize>,
    /// Comma-separated ridge multipliers (default: 0, 0.025, ..., 0.2).
    #[arg(long, value_delimiter = ',')]
    pub deltas: Option<Vec<f64>>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Also write the table here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DVariantArgs {
    #[command(flatten)]
    pub source: GraphSource,
    #[arg(long)]
    pub labels: Option<PathBuf>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FetchArgs {
    /// Dataset name; files are stored as `<name>.edges` and `<name>.labels`.
    #[arg(long)]
    pub name: String,
    /// URL or local path of the edge list.
    #[arg(long)]
    pub edges: String,
    /// URL or local path of the label file.
    #[arg(long)]
    pub labels: String,
    /// Target directory (default: $ISC_DATA_DIR).
    #[arg(long)]
    pub dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SpectrumArgs {
    #[command(flatten)]
    pub source: GraphSource,
    #[arg(long)]
    pub k: usize,
    #[arg(long, value_enum, default_value = "laplacian")]
    pub operator: OperatorArg,
    #[arg(long, default_value_t = 0.1)]
    pub delta: f64,
    #[arg(long, default_value = "midpoint")]
    pub d_variant: DVariant,
    /// Also write the eigenpairs (text format) here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Exit status for an error.
pub fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::Parameter(_) => 2,
        Error::Parse { .. } | Error::Io { .. } | Error::Dimension(_) | Error::Fetch { .. } => 3,
        Error::Singular { .. } | Error::UndefinedRatio(_) | Error::Numerical { .. } => 4,
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run_from<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::Cluster(a) => cmd_cluster(&a),
        Command::Generate(a) => cmd_generate(&a),
        Command::Eval(a) => cmd_eval(&a),
        Command::Experiment(a) => cmd_experiment(&a),
        Command::SweepDelta(a) => cmd_sweep_delta(&a),
        Command::DVariants(a) => cmd_d_variants(&a),
        Command::Fetch(a) => cmd_fetch(&a),
        Command::Spectrum(a) => cmd_spectrum(&a),
    }
}

/// Writes to stdout, treating a closed pipe (e.g. `| head`) as success.
fn emit(text: &str) -> Result<()> {
    use std::io::Write;
    match std::io::stdout().lock().write_all(text.as_bytes()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(Error::io("<stdout>", e)),
        _ => Ok(()),
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("metadata serializes");
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

/// `foo.labels` -> `foo.labels.meta.json`.
pub fn sidecar_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_os_string();
    s.push(".meta.json");
    PathBuf::from(s)
}

#[derive(Debug, Serialize)]
struct ClusterMeta {
    method: &'static str,
    input: String,
    n: usize,
    k: usize,
    seed: u64,
    restarts: usize,
    delta: Option<f64>,
    d_variant: Option<&'static str>,
    ridge: Option<f64>,
    n_eigs: Option<String>,
    threshold: Option<f64>,
    inertia: f64,
    sizes: Vec<usize>,
    eigenvalues: Vec<f64>,
    weak_signal: Option<f64>,
    zero_rows: usize,
    degenerate_ratios: usize,
    /// Original node index of each output line when `--lcc` was used.
    nodes: Option<Vec<usize>>,
}

fn method_name(m: MethodArg) -> &'static str {
    match m {
        MethodArg::Isc => "isc",
        MethodArg::Score => "score",
        MethodArg::Rsc => "rsc",
    }
}

fn cmd_cluster(a: &ClusterArgs) -> Result<()> {
    if a.restarts == 0 {
        return Err(Error::Parameter("--restarts must be >= 1".into()));
    }
    let (g, nodes) = a.source.graph()?;
    let kmeans = KMeansOptions {
        restarts: a.restarts,
        max_iter: 300,
        seed: a.seed,
    };
    let eigen = EigenOptions {
        seed: a.seed,
        ..EigenOptions::default()
    };
    let n_eigs_name = |ne: NEigs| Some(if ne == NEigs::K { "K" } else { "K+1" }.to_string());
    let (partition, meta): (Partition, ClusterMeta) = {
        let base = |partition: &Partition, es: &EigenSystem| ClusterMeta {
            method: method_name(a.method),
            input: a.source.label(),
            n: g.n(),
            k: a.k,
            seed: a.seed,
            restarts: a.restarts,
            delta: None,
            d_variant: None,
            ridge: None,
            n_eigs: None,
            threshold: None,
            inertia: partition.inertia,
            sizes: partition.sizes.clone(),
            eigenvalues: es.values.clone(),
            weak_signal: weak_signal_quantity(es, a.k).ok(),
            zero_rows: 0,
            degenerate_ratios: 0,
            nodes: nodes.clone(),
        };
        match a.method {
            MethodArg::Isc => {
                let opts = IscOptions {
                    delta: a.delta,
                    variant: a.d_variant,
                    kmeans,
                    eigen,
                };
                let out = isc_cluster(&g, a.k, &opts)?;
                let mut meta = base(&out.partition, &out.eigensystem);
                meta.delta = Some(a.delta);
                meta.d_variant = Some(a.d_variant.name());
                meta.ridge = Some(out.ridge.value());
                meta.zero_rows = out.embedding.zero_row_count();
                (out.partition, meta)
            }
            MethodArg::Score => {
                let opts = ScoreOptions {
                    n_eigs: a.n_eigs,
                    threshold: a.threshold,
                    kmeans,
                    eigen,
                };
                let out = score_cluster(&g, a.k, &opts)?;
                let mut meta = base(&out.partition, &out.eigensystem);
                meta.n_eigs = n_eigs_name(a.n_eigs);
                meta.threshold = Some(
                    a.threshold
                        .unwrap_or_else(|| crate::baselines::default_score_threshold(g.n())),
                );
                meta.degenerate_ratios = out.degenerate_ratios;
                (out.partition, meta)
            }
            MethodArg::Rsc => {
                let opts = RscOptions {
                    n_eigs: a.n_eigs,
                    tau: a.tau,
                    kmeans,
                    eigen,
                };
                let out = rsc_cluster(&g, a.k, &opts)?;
                let mut meta = base(&out.partition, &out.eigensystem);
                meta.n_eigs = n_eigs_name(a.n_eigs);
                meta.ridge = RegularizedLaplacian::with_tau(&g, a.tau)
                    .ok()
                    .map(|l| l.ridge().value());
                (out.partition, meta)
            }
        }
    };
    let out = a.out.clone().unwrap_or_else(|| {
        let mut s = PathBuf::from(a.source.label()).into_os_string();
        s.push(format!(".{}.labels", method_name(a.method)));
        PathBuf::from(s)
    });
    write_atomic(&out, partition.to_label_vector().to_text().as_bytes())?;
    write_json(&sidecar_path(&out), &meta)?;
    eprintln!("wrote {} ({} nodes, K = {})", out.display(), g.n(), a.k);
    Ok(())
}

fn generate_model(a: &GenerateArgs) -> Result<ModelSpec> {
    let mut model = match (&a.name, &a.config) {
        (Some(name), _) => harness::builtin(name)
            .map(|c| c.model)
            .ok_or_else(|| unknown_experiment(name))?,
        (None, Some(path)) => {
            let text = read_to_string(path)?;
            match toml::from_str::<ModelSpec>(&text) {
                Ok(m) => m,
                Err(model_err) => match ExperimentConfig::from_toml(&text) {
                    Ok(cfg) => cfg.model,
                    Err(_) => return Err(Error::Config(format!("{}: {model_err}", path.display()))),
                },
            }
        }
        (None, None) => unreachable!("clap requires one source"),
    };
    if let Some(n) = a.n {
        model.n = n;
    }
    Ok(model)
}

fn cmd_generate(a: &GenerateArgs) -> Result<()> {
    let model = generate_model(a)?;
    // Any violated constraint is a config problem here.
    let invalid = |e: Error| match e {
        Error::Parameter(m) | Error::Config(m) => Error::Config(m),
        other => other,
    };
    model.validate().map_err(invalid)?;
    let params = model.realize(crate::rng::derive_seed(a.seed, 0)).map_err(invalid)?;
    for issue in params.structural_issues() {
        log::warn!("{issue}");
    }
    let g = sample_adjacency(&params, crate::rng::derive_seed(a.seed, 1));
    let with_ext = |ext: &str| {
        let mut s = a.out_prefix.clone().into_os_string();
        s.push(ext);
        PathBuf::from(s)
    };
    write_atomic(&with_ext(".edges"), edge_list_text(&g).as_bytes())?;
    write_atomic(&with_ext(".labels"), params.labels().to_text().as_bytes())?;
    #[derive(Serialize)]
    struct GenerateMeta<'a> {
        seed: u64,
        rng: &'static str,
        model: &'a ModelSpec,
        n_edges: usize,
    }
    write_json(
        &with_ext(".meta.json"),
        &GenerateMeta {
            seed: a.seed,
            rng: crate::rng::RNG_NAME,
            model: &model,
            n_edges: g.n_edges(),
        },
    )?;
    eprintln!("sampled {} nodes, {} edges", g.n(), g.n_edges());
    Ok(())
}

fn cmd_eval(a: &EvalArgs) -> Result<()> {
    let truth = load_labels(&a.truth)?;
    let pred = load_labels(&a.pred)?;
    if pred.len() != truth.len() {
        return Err(Error::Dimension(format!(
            "{} has {} labels, {} has {}",
            a.pred.display(),
            pred.len(),
            a.truth.display(),
            truth.len()
        )));
    }
    let err = clustering_error(pred.as_slice(), &truth)?;
    emit(&format!("{}/{}, rate {:?}\n", err.mismatches, err.n, err.rate))?;
    let perm: Vec<String> = err
        .best_perm
        .iter()
        .enumerate()
        .map(|(p, t)| format!("{}->{}", p + 1, t + 1))
        .collect();
    emit(&format!("permutation {}\n", perm.join(" ")))?;
    if let Some(path) = &a.report {
        let report = Report {
            method: "external".into(),
            dataset: a.truth.display().to_string(),
            k: truth.k(),
            errors: err.mismatches,
            n: err.n,
            rate: err.rate,
            best_perm: err.best_perm.clone(),
            ..Report::default()
        };
        write_json(path, &report)?;
    }
    Ok(())
}

fn unknown_experiment(name: &str) -> Error {
    Error::Config(format!(
        "unknown experiment {name:?}; available: {}",
        harness::builtin_names().join(", ")
    ))
}

fn cmd_experiment(a: &ExperimentArgs) -> Result<()> {
    let mut cfg = match (&a.name, &a.config) {
        (Some(name), _) => harness::builtin(name).ok_or_else(|| unknown_experiment(name))?,
        (None, Some(path)) => ExperimentConfig::load(path)?,
        (None, None) => unreachable!("clap requires one source"),
    };
    if let Some(r) = a.replicates {
        cfg.replicates = r;
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(r) = a.restarts {
        cfg.restarts = r;
    }
    cfg.validate()?;
    let out = a.out.clone().unwrap_or_else(|| Path::new("results").join(&cfg.name));
    let result = match &a.ledger {
        Some(ledger) => harness::run_experiment_with_ledger(&cfg, ledger)?,
        None => harness::run_experiment(&cfg)?,
    };
    let written = harness::write_outputs(&result, &out)?;
    emit(&harness::summary_tsv(&result))?;
    eprintln!("wrote {} files to {}", written.len(), out.display());
    Ok(())
}

fn sweep_inputs(source: &GraphSource, labels: Option<&Path>, k: Option<usize>) -> Result<(Dataset, usize)> {
    let ds = source.labeled(labels)?;
    let k = k.unwrap_or_else(|| ds.k());
    Ok((ds, k))
}

fn cmd_sweep_delta(a: &SweepDeltaArgs) -> Result<()> {
    let (ds, k) = sweep_inputs(&a.source, a.labels.as_deref(), a.k)?;
    let deltas = a.deltas.clone().unwrap_or_else(harness::default_delta_grid);
    let rows = harness::run_delta_sweep(&ds.graph, &ds.labels, k, &deltas, a.seed)?;
    emit_table(&harness::sweep_tsv(&rows, ds.graph.n()), a.out.as_deref())
}

fn cmd_d_variants(a: &DVariantArgs) -> Result<()> {
    let (ds, k) = sweep_inputs(&a.source, a.labels.as_deref(), a.k)?;
    let rows = harness::run_d_variant_table(&ds.graph, &ds.labels, k, a.seed)?;
    emit_table(&harness::sweep_tsv(&rows, ds.graph.n()), a.out.as_deref())
}

fn emit_table(text: &str, out: Option<&Path>) -> Result<()> {
    emit(text)?;
    if let Some(path) = out {
        write_atomic(path, text.as_bytes())?;
    }
    Ok(())
}

fn cmd_fetch(a: &FetchArgs) -> Result<()> {
    let dir = a
        .dir
        .clone()
        .or_else(datasets::data_dir)
        .ok_or_else(|| Error::Config(format!("fetch needs --dir or ${}", datasets::DATA_DIR_ENV)))?;
    let ds = datasets::fetch_dataset(&a.name, &a.edges, &a.labels, &dir)?;
    emit(&format!(
        "{}: {} nodes, {} edges, {} communities in {}\n",
        ds.name,
        ds.graph.n(),
        ds.graph.n_edges(),
        ds.k(),
        dir.display()
    ))
}

fn cmd_spectrum(a: &SpectrumArgs) -> Result<()> {
    let (g, _) = a.source.graph()?;
    let count = (a.k + 1).min(g.n());
    let opts = EigenOptions::default();
    let (es, ridge) = match a.operator {
        OperatorArg::Laplacian => {
            let lap = RegularizedLaplacian::new(&g, a.delta, a.d_variant)?;
            (leading_eigenpairs(&lap, count, &opts)?, Some(lap.ridge()))
        }
        OperatorArg::Adjacency => (leading_eigenpairs(&g, count, &opts)?, None),
    };
    let mut text = String::new();
    if let Some(Ridge::Scaled { d, .. }) = ridge {
        writeln!(text, "d\t{d}").unwrap();
    }
    for (i, v) in es.values.iter().enumerate() {
        writeln!(text, "lambda_{}\t{v}", i + 1).unwrap();
    }
    match weak_signal_quantity(&es, a.k) {
        Ok(w) => writeln!(
            text,
            "weak_signal\t{w}\t{}",
            if is_weak_signal(w) { "weak" } else { "strong" }
        ),
        Err(e) => writeln!(text, "weak_signal\tNA\t{e}"),
    }
    .unwrap();
    if let Some(path) = &a.out {
        write_atomic(path, es.to_text().as_bytes())?;
    }
    emit(&text)
}

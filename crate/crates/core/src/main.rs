//! `ddsm` command-line interface.
//!
//! Every command writes its artifacts plus `manifest.json` into `--out-dir`.
//! Exit codes: 0 success, 1 runtime or property failure, 2 usage error.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use ddsm::checks::{run_checks, CheckOptions, CheckScale, Suite};
use ddsm::distances::{
    compute_distances, diffusion_embedding, edge_distances, DistanceKind, DistanceMode,
    EdgeDistances,
};
use ddsm::generators::{generate_sbm, SbmSpec};
use ddsm::io;
use ddsm::metrics::{diagnostics, DiagnosticsReport};
use ddsm::pipeline::{
    evaluate, fit_classifier, run_ablation, AblationConfig, FeatureMap, SplitSpec, TrainConfig,
};
use ddsm::propagation::{propagate, propagate_with_diagnostics, PropagationConfig, ThirdTerm};
use ddsm::spectral::{eig_dense, eig_truncated, LanczosConfig, OperatorKind, Selection};
use ddsm::{FeatureMatrix, Graph, LabeledGraph};

#[derive(Parser, Debug)]
#[command(
    name = "ddsm",
    version,
    about = "Diffusion-distance-guided stress-majorization message passing"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug, Clone, Serialize)]
enum Cmd {
    /// Sample a stochastic block model: graph, features, labels and splits.
    Synth(SynthArgs),
    /// Compute a per-edge distance cache.
    Dist(DistArgs),
    /// Compute and cache a truncated eigenbasis.
    Eig(EigArgs),
    /// Run property suites and write a JSON report.
    Check(CheckArgs),
    /// Dirichlet energy, SMV, Corr, HOS and homophily of a feature matrix.
    Metrics(MetricsArgs),
    /// Apply DDSM layers to a feature matrix.
    Propagate(PropagateArgs),
    /// Propagate, then fit a softmax classifier.
    Train(TrainArgs),
    /// Accuracy table over distance kinds, seeds and orthogonality arms.
    Ablate(AblateArgs),
    /// Re-run a command from its manifest and compare artifact digests.
    Replay(ReplayArgs),
}

#[derive(Args, Debug, Clone, Serialize)]
struct OutArgs {
    /// Directory for artifacts and manifest.json.
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args, Debug, Clone, Serialize)]
struct GraphArgs {
    /// Edge list: `u v [w]` per line, 0-based ids, `#` comments.
    #[arg(long)]
    graph: PathBuf,
    /// Node count when it exceeds `max id + 1`.
    #[arg(long)]
    nodes: Option<usize>,
    /// Add a unit self-loop to every node.
    #[arg(long)]
    self_loops: bool,
}

#[derive(Args, Debug, Clone, Serialize)]
struct FeatureArgs {
    /// Feature CSV, one row per node.
    #[arg(long)]
    features: PathBuf,
    /// The feature CSV starts with a header row.
    #[arg(long)]
    header: bool,
}

#[derive(Args, Debug, Clone, Serialize)]
struct KindArgs {
    /// vdd, prdd, hkdd, spd, jaccard, resistance, biharmonic or zero.
    #[arg(long)]
    kind: String,
    /// VDD diffusion time (default 10).
    #[arg(long)]
    t: Option<u32>,
    /// PRDD damping (default 0.9) or HKDD time scale (default 10).
    #[arg(long)]
    gamma: Option<f64>,
}

#[derive(Args, Debug, Clone, Serialize)]
struct LanczosArgs {
    /// Eigenpairs to retain.
    #[arg(long, default_value_t = 32)]
    kappa: usize,
    /// Seed of the Lanczos start vector.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 200_000)]
    max_iters: usize,
    /// Residual tolerance for accepted eigenpairs.
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
}

impl LanczosArgs {
    fn config(&self) -> LanczosConfig {
        LanczosConfig {
            max_iters: self.max_iters,
            tol: self.tol,
            seed: self.seed,
        }
    }
}

#[derive(Args, Debug, Clone, Serialize)]
struct PropArgs {
    #[arg(long, default_value_t = 0.1)]
    alpha: f64,
    #[arg(long, default_value_t = 0.0)]
    beta: f64,
    #[arg(long, default_value_t = 1.0)]
    eta: f64,
    #[arg(long, default_value_t = 4)]
    layers: usize,
    #[arg(long, default_value_t = 1e-8)]
    eps_denom: f64,
    /// column-normalized, raw or raw-as-printed.
    #[arg(long, default_value = "column-normalized")]
    third_term: String,
}

impl PropArgs {
    fn config(&self) -> anyhow::Result<PropagationConfig> {
        let cfg = PropagationConfig {
            alpha: self.alpha,
            beta: self.beta,
            eta: self.eta,
            layers: self.layers,
            eps_denom: self.eps_denom,
            third_term: self.third_term.parse::<ThirdTerm>().map_err(usage)?,
        };
        cfg.validate().map_err(usage)?;
        Ok(cfg)
    }
}

#[derive(Args, Debug, Clone, Serialize)]
struct FitArgs {
    #[arg(long, default_value_t = 0.5)]
    lr: f64,
    #[arg(long, default_value_t = 5e-4)]
    wd: f64,
    #[arg(long, default_value_t = 500)]
    epochs: usize,
    /// Early-stopping window on validation accuracy; 0 disables.
    #[arg(long, default_value_t = 100)]
    patience: usize,
    /// identity, random:<dim> or pca:<dim>.
    #[arg(long, default_value = "identity")]
    feature_map: String,
}

impl FitArgs {
    fn config(&self, prop: PropagationConfig, seed: u64) -> anyhow::Result<TrainConfig> {
        let cfg = TrainConfig {
            lr: self.lr,
            weight_decay: self.wd,
            epochs: self.epochs,
            patience: self.patience,
            feature_map: parse_feature_map(&self.feature_map, seed)?,
            prop,
        };
        cfg.validate().map_err(usage)?;
        Ok(cfg)
    }
}

#[derive(Args, Debug, Clone, Serialize)]
struct SynthArgs {
    #[arg(long, default_value_t = 40)]
    n: usize,
    #[arg(long, default_value_t = 2)]
    classes: usize,
    #[arg(long, default_value_t = 0.5)]
    p_in: f64,
    #[arg(long, default_value_t = 0.02)]
    p_out: f64,
    #[arg(long, default_value_t = 8)]
    feature_dim: usize,
    /// Distance between class feature means.
    #[arg(long, default_value_t = 2.0)]
    feature_sep: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.6)]
    train_frac: f64,
    #[arg(long, default_value_t = 0.2)]
    val_frac: f64,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args, Debug, Clone, Serialize)]
struct DistArgs {
    #[command(flatten)]
    graph: GraphArgs,
    #[command(flatten)]
    kind: KindArgs,
    #[command(flatten)]
    lanczos: LanczosArgs,
    /// Dense series oracle instead of truncated Lanczos.
    #[arg(long, conflicts_with = "basis")]
    exact: bool,
    /// Reuse a basis written by `eig` instead of running Lanczos.
    #[arg(long)]
    basis: Option<PathBuf>,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args, Debug, Clone, Serialize)]
struct EigArgs {
    #[command(flatten)]
    graph: GraphArgs,
    /// adjacency (D^-1/2 A D^-1/2) or laplacian (I - D^-1/2 A D^-1/2).
    #[arg(long, default_value = "adjacency")]
    operator: String,
    /// largest-abs, largest or smallest.
    #[arg(long, default_value = "largest-abs")]
    selection: String,
    #[command(flatten)]
    lanczos: LanczosArgs,
    /// Full dense eigendecomposition, then select.
    #[arg(long)]
    dense: bool,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args, Debug, Clone, Serialize)]
struct CheckArgs {
    /// bounds, gradient, limits, homophily, oracle, eigen, stability or all.
    #[arg(long, default_value = "all")]
    suite: String,
    /// Graph for the limits suite (replaces its generated corpus).
    #[arg(long)]
    graph: Option<PathBuf>,
    #[arg(long)]
    nodes: Option<usize>,
    #[arg(long)]
    self_loops: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Small corpora for smoke runs.
    #[arg(long)]
    quick: bool,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args, Debug, Clone, Serialize)]
struct MetricsArgs {
    #[command(flatten)]
    graph: GraphArgs,
    #[command(flatten)]
    features: FeatureArgs,
    /// Labels (one per line) enable HOS and homophily.
    #[arg(long)]
    labels: Option<PathBuf>,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args, Debug, Clone, Serialize)]
struct PropagateArgs {
    #[command(flatten)]
    graph: GraphArgs,
    #[command(flatten)]
    features: FeatureArgs,
    /// Distance cache from `dist`; zero distances when absent.
    #[arg(long)]
    dist_cache: Option<PathBuf>,
    #[command(flatten)]
    prop: PropArgs,
    /// Also write per-layer diagnostics to layers.csv.
    #[arg(long)]
    diagnostics: bool,
    #[arg(long)]
    labels: Option<PathBuf>,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args, Debug, Clone, Serialize)]
struct TrainArgs {
    #[command(flatten)]
    graph: GraphArgs,
    #[command(flatten)]
    features: FeatureArgs,
    #[arg(long)]
    labels: PathBuf,
    /// Split file; stratified 60/20/20 from `--seed` when absent.
    #[arg(long)]
    splits: Option<PathBuf>,
    /// Distance cache from `dist`; zero distances when absent.
    #[arg(long)]
    dist_cache: Option<PathBuf>,
    #[command(flatten)]
    prop: PropArgs,
    #[command(flatten)]
    fit: FitArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args, Debug, Clone, Serialize)]
struct AblateArgs {
    #[command(flatten)]
    graph: GraphArgs,
    #[command(flatten)]
    features: FeatureArgs,
    #[arg(long)]
    labels: PathBuf,
    /// Comma-separated distance kinds.
    #[arg(long, default_value = "vdd,prdd,hkdd,spd,jaccard,zero")]
    kinds: String,
    #[arg(long)]
    t: Option<u32>,
    #[arg(long)]
    gamma_pr: Option<f64>,
    #[arg(long)]
    gamma_hk: Option<f64>,
    /// Eigenpairs for diffusion kinds.
    #[arg(long, default_value_t = 32)]
    kappa: usize,
    /// Dense series oracle instead of Lanczos.
    #[arg(long)]
    exact: bool,
    /// Split seeds: a comma list or a range `a-b`.
    #[arg(long, default_value = "0-9")]
    seeds: String,
    /// Orthogonality coefficients to sweep.
    #[arg(long, default_value = "0,0.1")]
    betas: String,
    #[arg(long, default_value_t = 0.6)]
    train_frac: f64,
    #[arg(long, default_value_t = 0.2)]
    val_frac: f64,
    #[command(flatten)]
    prop: PropArgs,
    #[command(flatten)]
    fit: FitArgs,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args, Debug, Clone, Serialize)]
struct ReplayArgs {
    manifest: PathBuf,
    /// Where to write the re-run artifacts (default: a `replay` directory
    /// next to the manifest).
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Debug, Serialize, Deserialize)]
struct RunManifest {
    tool: String,
    version: String,
    command: String,
    /// Arguments after the program name, as given.
    argv: Vec<String>,
    /// Working directory the arguments are relative to.
    cwd: PathBuf,
    config: serde_json::Value,
    /// Input path → SHA-256.
    inputs: BTreeMap<String, String>,
    seeds: BTreeMap<String, u64>,
    /// Artifact file name (inside the output directory) → SHA-256.
    artifacts: BTreeMap<String, String>,
    summary: serde_json::Value,
    timings_ms: BTreeMap<String, f64>,
}

/// Marks errors that should exit with status 2.
#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

/// Property-suite failure (exit 1) after the report was written.
#[derive(Debug)]
struct PropertyFailure(String);

impl std::fmt::Display for PropertyFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for PropertyFailure {}

fn usage(e: impl std::fmt::Display) -> anyhow::Error {
    anyhow::Error::new(UsageError(e.to_string()))
}

/// Collects artifacts and provenance for one command.
struct Run {
    out_dir: PathBuf,
    inputs: BTreeMap<String, String>,
    seeds: BTreeMap<String, u64>,
    artifacts: BTreeMap<String, String>,
    summary: serde_json::Map<String, serde_json::Value>,
    timings: BTreeMap<String, f64>,
    start: Instant,
}

impl Run {
    fn new(out: &OutArgs) -> anyhow::Result<Self> {
        fs::create_dir_all(&out.out_dir)
            .with_context(|| format!("creating {}", out.out_dir.display()))?;
        Ok(Self {
            out_dir: out.out_dir.clone(),
            inputs: BTreeMap::new(),
            seeds: BTreeMap::new(),
            artifacts: BTreeMap::new(),
            summary: serde_json::Map::new(),
            timings: BTreeMap::new(),
            start: Instant::now(),
        })
    }

    fn input(&mut self, path: &Path) -> anyhow::Result<()> {
        let digest =
            io::sha256_file(path).with_context(|| format!("reading {}", path.display()))?;
        self.inputs.insert(path.display().to_string(), digest);
        Ok(())
    }

    fn seed(&mut self, name: &str, seed: u64) {
        self.seeds.insert(name.to_string(), seed);
    }

    fn note(&mut self, key: &str, v: impl Serialize) {
        self.summary.insert(
            key.to_string(),
            serde_json::to_value(v).unwrap_or(serde_json::Value::Null),
        );
    }

    fn time<T>(&mut self, phase: &str, f: impl FnOnce() -> T) -> T {
        let t = Instant::now();
        let out = f();
        self.timings
            .insert(phase.to_string(), t.elapsed().as_secs_f64() * 1e3);
        out
    }

    fn write(
        &mut self,
        name: &str,
        fill: impl FnOnce(&mut Vec<u8>) -> ddsm::Result<()>,
    ) -> anyhow::Result<PathBuf> {
        let mut buf = Vec::new();
        fill(&mut buf)?;
        let path = self.out_dir.join(name);
        fs::write(&path, &buf).with_context(|| format!("writing {}", path.display()))?;
        self.artifacts
            .insert(name.to_string(), io::sha256_hex(&buf));
        Ok(path)
    }

    fn finish(mut self, cmd: &Cmd, argv: &[String]) -> anyhow::Result<()> {
        self.timings
            .insert("total".into(), self.start.elapsed().as_secs_f64() * 1e3);
        let m = RunManifest {
            tool: "ddsm".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: cmd.name().into(),
            argv: argv.to_vec(),
            cwd: std::env::current_dir()?,
            config: serde_json::to_value(cmd)?,
            inputs: self.inputs,
            seeds: self.seeds,
            artifacts: self.artifacts,
            summary: serde_json::Value::Object(self.summary),
            timings_ms: self.timings,
        };
        let path = self.out_dir.join("manifest.json");
        fs::write(&path, serde_json::to_string_pretty(&m)? + "\n")?;
        Ok(())
    }
}

impl Cmd {
    fn name(&self) -> &'static str {
        match self {
            Cmd::Synth(_) => "synth",
            Cmd::Dist(_) => "dist",
            Cmd::Eig(_) => "eig",
            Cmd::Check(_) => "check",
            Cmd::Metrics(_) => "metrics",
            Cmd::Propagate(_) => "propagate",
            Cmd::Train(_) => "train",
            Cmd::Ablate(_) => "ablate",
            Cmd::Replay(_) => "replay",
        }
    }

    fn set_out_dir(&mut self, dir: PathBuf) {
        let out = match self {
            Cmd::Synth(a) => &mut a.out,
            Cmd::Dist(a) => &mut a.out,
            Cmd::Eig(a) => &mut a.out,
            Cmd::Check(a) => &mut a.out,
            Cmd::Metrics(a) => &mut a.out,
            Cmd::Propagate(a) => &mut a.out,
            Cmd::Train(a) => &mut a.out,
            Cmd::Ablate(a) => &mut a.out,
            Cmd::Replay(a) => {
                a.out_dir = Some(dir);
                return;
            }
        };
        out.out_dir = dir;
    }
}

fn parse_feature_map(s: &str, seed: u64) -> anyhow::Result<FeatureMap> {
    let dim = |d: &str| {
        d.parse::<usize>()
            .map_err(|_| usage(format!("bad feature-map dimension {d:?}")))
    };
    match s.split_once(':') {
        None if s == "identity" => Ok(FeatureMap::Identity),
        Some(("random", d)) => Ok(FeatureMap::RandomProjection { dim: dim(d)?, seed }),
        Some(("pca", d)) => Ok(FeatureMap::TruncatedPca { dim: dim(d)? }),
        _ => Err(usage(format!(
            "unknown feature map {s:?}; use identity, random:<dim> or pca:<dim>"
        ))),
    }
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> anyhow::Result<Vec<T>> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<T>()
                .map_err(|_| usage(format!("bad {what} entry {t:?}")))
        })
        .collect()
}

fn parse_seeds(s: &str) -> anyhow::Result<Vec<u64>> {
    if let Some((a, b)) = s.split_once('-') {
        let (a, b) = (a.trim().parse::<u64>(), b.trim().parse::<u64>());
        match (a, b) {
            (Ok(a), Ok(b)) if a <= b => return Ok((a..=b).collect()),
            _ => return Err(usage(format!("bad seed range {s:?}"))),
        }
    }
    parse_list(s, "seed")
}

fn load_graph(run: &mut Run, a: &GraphArgs) -> anyhow::Result<Graph> {
    run.input(&a.graph)?;
    io::load_graph(&a.graph, a.nodes, a.self_loops)
        .with_context(|| format!("loading {}", a.graph.display()))
}

fn load_features(run: &mut Run, a: &FeatureArgs, g: &Graph) -> anyhow::Result<FeatureMatrix> {
    run.input(&a.features)?;
    let x = io::parse_features_csv(fs::File::open(&a.features)?, a.header)
        .with_context(|| format!("loading {}", a.features.display()))?;
    if x.rows() != g.node_count() {
        bail!(
            "{} has {} rows but the graph has {} nodes",
            a.features.display(),
            x.rows(),
            g.node_count()
        );
    }
    Ok(x)
}

fn load_labeled(run: &mut Run, g: Graph, path: &Path) -> anyhow::Result<LabeledGraph> {
    run.input(path)?;
    let labels = io::parse_labels(fs::File::open(path)?)
        .with_context(|| format!("loading {}", path.display()))?;
    Ok(LabeledGraph::from_labels(g, labels)?)
}

fn load_delta(run: &mut Run, path: Option<&Path>, g: &Graph) -> anyhow::Result<EdgeDistances> {
    match path {
        Some(p) => {
            run.input(p)?;
            io::read_distances(g, fs::File::open(p)?)
                .with_context(|| format!("loading {}", p.display()))
        }
        None => Ok(EdgeDistances::zeros(g)),
    }
}

fn cmd_synth(a: &SynthArgs, run: &mut Run) -> anyhow::Result<()> {
    let spec = SbmSpec {
        n: a.n,
        classes: a.classes,
        p_in: a.p_in,
        p_out: a.p_out,
        feature_dim: a.feature_dim,
        feature_sep: a.feature_sep,
        seed: a.seed,
    };
    spec.validate().map_err(usage)?;
    run.seed("sbm", a.seed);
    let (lg, x) = generate_sbm(&spec)?;
    let split = SplitSpec::stratified(
        lg.labels(),
        lg.num_classes(),
        a.train_frac,
        a.val_frac,
        a.seed,
    )
    .map_err(usage)?;
    run.write("graph.tsv", |w| io::write_edge_list(&lg.graph, w))?;
    run.write("features.csv", |w| io::write_features_csv(&x, w))?;
    run.write("labels.txt", |w| io::write_labels(lg.labels(), w))?;
    run.write("splits.tsv", |w| io::write_splits(&split, w))?;
    let h = ddsm::metrics::homophily_ratio(&lg);
    run.note("edges", lg.graph.edge_count());
    run.note("homophily", h);
    println!(
        "n={} m={} homophily={}",
        lg.graph.node_count(),
        lg.graph.edge_count(),
        io::fmt17(h)
    );
    Ok(())
}

fn cmd_dist(a: &DistArgs, run: &mut Run) -> anyhow::Result<()> {
    let g = load_graph(run, &a.graph)?;
    let kind = DistanceKind::from_name(&a.kind.kind, a.kind.t, a.kind.gamma).map_err(usage)?;
    run.seed("lanczos", a.lanczos.seed);
    let d = if let Some(path) = &a.basis {
        run.input(path)?;
        let basis = io::read_basis(fs::File::open(path)?)
            .with_context(|| format!("loading {}", path.display()))?;
        let emb = diffusion_embedding(&g, &basis, kind)?;
        edge_distances(&g, &emb)?
    } else {
        let mode = if a.exact {
            DistanceMode::Exact
        } else {
            if a.lanczos.kappa == 0 {
                return Err(usage("--kappa must be positive"));
            }
            DistanceMode::Truncated {
                kappa: a.lanczos.kappa.min(g.node_count()),
                lanczos: a.lanczos.config(),
            }
        };
        run.time("distances", || compute_distances(&g, kind, mode))?
    };
    run.write("distances.tsv", |w| io::write_distances(&g, &d, w))?;
    run.note("kappa", d.kappa.to_string());
    run.note("max", d.max());
    println!(
        "{kind} kappa={} edges={} max={}",
        d.kappa,
        d.len(),
        io::fmt17(d.max())
    );
    Ok(())
}

fn cmd_eig(a: &EigArgs, run: &mut Run) -> anyhow::Result<()> {
    let g = load_graph(run, &a.graph)?;
    let op: OperatorKind = a.operator.parse().map_err(usage)?;
    let sel: Selection = a.selection.parse().map_err(usage)?;
    if a.lanczos.kappa == 0 || a.lanczos.kappa > g.node_count() {
        return Err(usage(format!("--kappa must lie in 1..={}", g.node_count())));
    }
    run.seed("lanczos", a.lanczos.seed);
    let basis = run.time("eigen", || {
        if a.dense {
            eig_dense(&g, op)?.select(sel, a.lanczos.kappa)
        } else {
            eig_truncated(&g, op, sel, a.lanczos.kappa, &a.lanczos.config())
        }
    })?;
    run.write("basis.tsv", |w| io::write_basis(&basis, w))?;
    let worst = basis.residuals(&g).into_iter().fold(0.0, f64::max);
    run.note("kappa", basis.kappa());
    run.note("max_residual", worst);
    println!("{op}/{sel} kappa={} max residual {worst:e}", basis.kappa());
    Ok(())
}

fn cmd_check(a: &CheckArgs, run: &mut Run) -> anyhow::Result<()> {
    let suites: Vec<Suite> = if a.suite == "all" {
        Suite::ALL.to_vec()
    } else {
        parse_list::<Suite>(&a.suite, "suite")?
    };
    let graph = match &a.graph {
        Some(p) => Some(load_graph(
            run,
            &GraphArgs {
                graph: p.clone(),
                nodes: a.nodes,
                self_loops: a.self_loops,
            },
        )?),
        None => None,
    };
    run.seed("corpus", a.seed);
    let opts = CheckOptions {
        seed: a.seed,
        scale: if a.quick {
            CheckScale::quick()
        } else {
            CheckScale::full()
        },
        graph,
    };
    let report = run.time("checks", || run_checks(&suites, &opts))?;
    run.write("report.json", |w| {
        serde_json::to_writer_pretty(&mut *w, &report).map_err(std::io::Error::from)?;
        w.push(b'\n');
        Ok(())
    })?;
    for s in &report.suites {
        let status = serde_json::to_value(&s.status)?;
        let reason = s
            .reason
            .as_deref()
            .map(|r| format!(" ({r})"))
            .unwrap_or_default();
        println!(
            "{:<10} {} {}/{} cases ok{reason}",
            s.suite.name(),
            status.as_str().unwrap_or("?"),
            s.cases - s.failures,
            s.cases
        );
    }
    run.note("passed", report.passed);
    if !report.passed {
        return Err(anyhow::Error::new(PropertyFailure(
            "one or more property suites failed".into(),
        )));
    }
    Ok(())
}

fn metrics_row(r: &DiagnosticsReport) -> String {
    r.csv_row()
}

fn cmd_metrics(a: &MetricsArgs, run: &mut Run) -> anyhow::Result<()> {
    let g = load_graph(run, &a.graph)?;
    let h = load_features(run, &a.features, &g)?;
    let lg = match &a.labels {
        Some(p) => Some(load_labeled(run, g.clone(), p)?),
        None => None,
    };
    let r = diagnostics(&g, &h, lg.as_ref())?;
    let row = metrics_row(&r);
    run.write("metrics.csv", |w| {
        w.extend_from_slice(format!("{}\n{row}\n", DiagnosticsReport::CSV_HEADER).as_bytes());
        Ok(())
    })?;
    println!("{}\n{row}", DiagnosticsReport::CSV_HEADER);
    Ok(())
}

fn cmd_propagate(a: &PropagateArgs, run: &mut Run) -> anyhow::Result<()> {
    let cfg = a.prop.config()?;
    let g = load_graph(run, &a.graph)?;
    let h0 = load_features(run, &a.features, &g)?;
    let delta = load_delta(run, a.dist_cache.as_deref(), &g)?;
    if a.diagnostics {
        let lg = match &a.labels {
            Some(p) => Some(load_labeled(run, g.clone(), p)?),
            None => None,
        };
        let (h, layers) = run.time("propagate", || {
            propagate_with_diagnostics(&g, &h0, &delta, &cfg, lg.as_ref())
        })?;
        run.write("propagated.csv", |w| io::write_features_csv(&h, w))?;
        run.write("layers.csv", |w| {
            w.extend_from_slice(
                format!("layer,objective,{}\n", DiagnosticsReport::CSV_HEADER).as_bytes(),
            );
            for l in &layers {
                w.extend_from_slice(
                    format!(
                        "{},{},{}\n",
                        l.layer,
                        io::fmt17(l.objective),
                        metrics_row(&l.report)
                    )
                    .as_bytes(),
                );
            }
            Ok(())
        })?;
    } else {
        let h = run.time("propagate", || propagate(&g, &h0, &delta, &cfg))?;
        run.write("propagated.csv", |w| io::write_features_csv(&h, w))?;
    }
    println!(
        "propagated {} layers over {} nodes",
        cfg.layers,
        g.node_count()
    );
    Ok(())
}

fn cmd_train(a: &TrainArgs, run: &mut Run) -> anyhow::Result<()> {
    let prop = a.prop.config()?;
    let cfg = a.fit.config(prop, a.seed)?;
    let g = load_graph(run, &a.graph)?;
    let x = load_features(run, &a.features, &g)?;
    let lg = load_labeled(run, g, &a.labels)?;
    let delta = load_delta(run, a.dist_cache.as_deref(), &lg.graph)?;
    let split = match &a.splits {
        Some(p) => {
            run.input(p)?;
            io::parse_splits(fs::File::open(p)?)
                .with_context(|| format!("loading {}", p.display()))?
        }
        None => SplitSpec::default_for(&lg, a.seed)?,
    };
    run.seed("split", split.seed);
    run.seed("train", a.seed);
    let fit = run.time("fit", || fit_classifier(&lg, &x, &delta, &split, &cfg))?;
    let test_acc = evaluate(&fit.model, &fit.features, lg.labels(), &split.test);
    run.write("history.csv", |w| io::write_history(&fit.history, w))?;
    run.write("model.tsv", |w| io::write_model(&fit.model, w))?;
    let pred = fit.model.predict(&fit.features);
    run.write("predictions.txt", |w| io::write_labels(&pred, w))?;
    run.note("best_epoch", fit.best_epoch);
    run.note("best_val_acc", fit.best_val_acc);
    run.note("test_acc", test_acc);
    println!(
        "best epoch {} val_acc={} test_acc={}",
        fit.best_epoch,
        io::fmt17(fit.best_val_acc),
        io::fmt17(test_acc)
    );
    Ok(())
}

fn cmd_ablate(a: &AblateArgs, run: &mut Run) -> anyhow::Result<()> {
    let prop = a.prop.config()?;
    let seeds = parse_seeds(&a.seeds)?;
    if seeds.is_empty() {
        return Err(usage("no seeds given"));
    }
    let train = a.fit.config(prop, seeds[0])?;
    let kinds = a
        .kinds
        .split(',')
        .map(str::trim)
        .filter(|k| !k.is_empty())
        .map(|k| {
            let gamma = match k {
                "prdd" => a.gamma_pr,
                "hkdd" => a.gamma_hk,
                _ => None,
            };
            DistanceKind::from_name(k, a.t, gamma).map_err(usage)
        })
        .collect::<anyhow::Result<Vec<_>>>()?;
    let betas: Vec<f64> = parse_list(&a.betas, "beta")?;
    let g = load_graph(run, &a.graph)?;
    let x = load_features(run, &a.features, &g)?;
    let lg = load_labeled(run, g, &a.labels)?;
    let mode = if a.exact {
        DistanceMode::Exact
    } else {
        DistanceMode::Truncated {
            kappa: a.kappa.clamp(1, lg.graph.node_count()),
            lanczos: LanczosConfig::default(),
        }
    };
    for &s in &seeds {
        run.seed(&format!("split{s}"), s);
    }
    let cfg = AblationConfig {
        train,
        distance_mode: mode,
        betas,
        train_frac: a.train_frac,
        val_frac: a.val_frac,
    };
    let table = run.time("ablation", || run_ablation(&lg, &x, &kinds, &cfg, &seeds))?;
    run.write("ablation.csv", |w| {
        w.extend_from_slice(table.to_csv().as_bytes());
        Ok(())
    })?;
    run.write("ablation_summary.csv", |w| {
        w.extend_from_slice(table.summary_csv().as_bytes());
        Ok(())
    })?;
    print!("{}", table.summary_csv());
    Ok(())
}

fn cmd_replay(a: &ReplayArgs) -> anyhow::Result<()> {
    let text = fs::read_to_string(&a.manifest)
        .with_context(|| format!("reading {}", a.manifest.display()))?;
    let m: RunManifest =
        serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", a.manifest.display())))?;
    let out_dir = match &a.out_dir {
        Some(d) => d.clone(),
        None => a.manifest.parent().unwrap_or(Path::new(".")).join("replay"),
    };
    fs::create_dir_all(&out_dir)?;
    let out_dir = out_dir.canonicalize()?;
    let cli =
        Cli::try_parse_from(std::iter::once("ddsm".to_string()).chain(m.argv.iter().cloned()))
            .map_err(|e| usage(format!("manifest argv does not parse: {e}")))?;
    let mut cmd = cli.cmd;
    if matches!(cmd, Cmd::Replay(_)) {
        return Err(usage("refusing to replay a replay"));
    }
    cmd.set_out_dir(out_dir.clone());
    std::env::set_current_dir(&m.cwd).with_context(|| format!("entering {}", m.cwd.display()))?;
    for (path, digest) in &m.inputs {
        let now =
            io::sha256_file(Path::new(path)).with_context(|| format!("reading input {path}"))?;
        if &now != digest {
            bail!("input {path} changed since the manifest was written");
        }
    }
    let status = execute(&cmd, &m.argv);
    let new: RunManifest =
        serde_json::from_str(&fs::read_to_string(out_dir.join("manifest.json"))?)?;
    let mut mismatched = Vec::new();
    for (name, digest) in &m.artifacts {
        match new.artifacts.get(name) {
            Some(d) if d == digest => println!("identical {name}"),
            Some(_) => mismatched.push(format!("{name} differs")),
            None => mismatched.push(format!("{name} missing")),
        }
    }
    if !mismatched.is_empty() {
        return Err(anyhow!("replay mismatch: {}", mismatched.join(", ")));
    }
    status
}

fn execute(cmd: &Cmd, argv: &[String]) -> anyhow::Result<()> {
    let out = match cmd {
        Cmd::Synth(a) => &a.out,
        Cmd::Dist(a) => &a.out,
        Cmd::Eig(a) => &a.out,
        Cmd::Check(a) => &a.out,
        Cmd::Metrics(a) => &a.out,
        Cmd::Propagate(a) => &a.out,
        Cmd::Train(a) => &a.out,
        Cmd::Ablate(a) => &a.out,
        Cmd::Replay(a) => return cmd_replay(a),
    };
    let mut run = Run::new(out)?;
    let result = match cmd {
        Cmd::Synth(a) => cmd_synth(a, &mut run),
        Cmd::Dist(a) => cmd_dist(a, &mut run),
        Cmd::Eig(a) => cmd_eig(a, &mut run),
        Cmd::Check(a) => cmd_check(a, &mut run),
        Cmd::Metrics(a) => cmd_metrics(a, &mut run),
        Cmd::Propagate(a) => cmd_propagate(a, &mut run),
        Cmd::Train(a) => cmd_train(a, &mut run),
        Cmd::Ablate(a) => cmd_ablate(a, &mut run),
        Cmd::Replay(_) => unreachable!(),
    };
    match result {
        // a failed property suite still leaves a manifest behind
        Ok(()) => run.finish(cmd, argv),
        Err(e) if e.is::<PropertyFailure>() => {
            run.finish(cmd, argv)?;
            Err(e)
        }
        Err(e) => Err(e),
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    if e.is::<UsageError>() {
        return 2;
    }
    match e.downcast_ref::<ddsm::Error>() {
        Some(ddsm::Error::InvalidParameter(_)) => 2,
        _ => 1,
    }
}

fn init_threads() -> anyhow::Result<()> {
    if let Ok(v) = std::env::var("DDSM_THREADS") {
        let n: usize = v
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| usage(format!("DDSM_THREADS={v:?} is not a positive integer")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().skip(1).collect();
    let cli = Cli::parse();
    let result = init_threads().and_then(|()| execute(&cli.cmd, &argv));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

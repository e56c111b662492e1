use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "oasis", version, about = "Stereotype audits over dumped embedding and latent data")]
pub struct Cli {
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Attribute prevalence, stereotype score and verdict per attribute.
    Score(ScoreArgs),
    /// Spectral alignment of each attribute direction with the dataset.
    Wals(WalsArgs),
    /// Stereotype score and alignment side by side.
    Report(ReportArgs),
    /// Spectral clustering of image features.
    Cluster(ClusterArgs),
    /// Beam search for token sequences matching one cluster.
    Optimize(OptimizeArgs),
    /// Propagation index along latent trajectories.
    Spi(SpiArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Score(_) => "score",
            Command::Wals(_) => "wals",
            Command::Report(_) => "report",
            Command::Cluster(_) => "cluster",
            Command::Optimize(_) => "optimize",
            Command::Spi(_) => "spi",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct OutputArgs {
    /// Output file; stdout when omitted. A `<out>.meta.json` sidecar with
    /// run timestamps is written next to it.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DatasetArgs {
    /// Concept manifest; repeat to audit several datasets.
    #[arg(long = "manifest", required = true)]
    pub manifests: Vec<PathBuf>,
    /// Use features as stored instead of L2-normalizing them.
    #[arg(long)]
    pub no_normalize: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ScoreFlags {
    /// Override every attribute's stereotype margin.
    #[arg(long)]
    pub margin: Option<f64>,
    /// Exit with status 2 when any verdict is true.
    #[arg(long)]
    pub gate: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DeltaArg {
    /// Difference of the two description embeddings.
    Text,
    /// Supervised PCA over attribute-aware features.
    SpcaLinear,
    /// Kernel supervised PCA with the linear kernel.
    SpcaKernel,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct WalsFlags {
    /// Number of singular directions; defaults to 95% of the spectrum's mass.
    #[arg(long)]
    pub k: Option<usize>,
    /// Center features before the decomposition (default).
    #[arg(long, overrides_with = "no_center")]
    pub center: bool,
    #[arg(long, overrides_with = "center")]
    pub no_center: bool,
    #[arg(long, value_enum, default_value_t = DeltaArg::Text)]
    pub delta: DeltaArg,
}

impl WalsFlags {
    pub fn centered(&self) -> bool {
        !self.no_center
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ScoreArgs {
    #[command(flatten)]
    pub data: DatasetArgs,
    #[command(flatten)]
    pub score: ScoreFlags,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct WalsArgs {
    #[command(flatten)]
    pub data: DatasetArgs,
    #[command(flatten)]
    pub wals: WalsFlags,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ReportArgs {
    #[command(flatten)]
    pub data: DatasetArgs,
    #[command(flatten)]
    pub score: ScoreFlags,
    #[command(flatten)]
    pub wals: WalsFlags,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum AffinityArg {
    MutualKnn,
    Knn,
    Rbf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ClusterArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub no_normalize: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Number of clusters.
    #[arg(long = "clusters", visible_alias = "k", default_value_t = 2)]
    pub clusters: usize,
    #[arg(long, value_enum, default_value_t = AffinityArg::MutualKnn)]
    pub affinity: AffinityArg,
    /// Neighbours per node for the kNN graphs.
    #[arg(long, default_value_t = 10)]
    pub neighbors: usize,
    /// RBF bandwidth; the median pairwise distance when omitted.
    #[arg(long)]
    pub bandwidth: Option<f64>,
    #[arg(long, default_value_t = 10)]
    pub n_init: usize,
    #[arg(long, default_value_t = 300)]
    pub max_iter: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct OptimizeArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub no_normalize: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Labels written by `oasis cluster --format json`; without it the whole
    /// dataset is the target.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub cluster_id: usize,
    /// Built-in synthetic vocabulary (JSON). Otherwise `OASIS_BRIDGE_CMD`
    /// names the external embedder/proposer process.
    #[arg(long)]
    pub synthetic: Option<PathBuf>,
    /// Comma-separated start token ids, overriding the backend's own.
    #[arg(long, value_delimiter = ',')]
    pub start: Option<Vec<u32>>,
    #[arg(long, default_value_t = 3)]
    pub pair_steps: usize,
    #[arg(long, default_value_t = 5)]
    pub beam_width: usize,
    #[arg(long, default_value_t = 5)]
    pub top_k: usize,
    /// Candidates requested from the proposer per position.
    #[arg(long, default_value_t = oasis_core::stop::beam::DEFAULT_PROPOSAL_WIDTH)]
    pub proposal_width: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SpiArgs {
    /// Trajectory manifest; repeat for several samples.
    #[arg(long = "manifest", required = true)]
    pub manifests: Vec<PathBuf>,
    /// Restrict to these attributes; all attributes of the first
    /// trajectory when omitted.
    #[arg(long = "attribute")]
    pub attributes: Vec<String>,
    /// Also write the per-step mean and variance across samples here.
    #[arg(long)]
    pub aggregate: Option<PathBuf>,
    /// Write the predisposition estimate of the final latent from step T.
    #[arg(long)]
    pub estimate: Option<usize>,
    /// Directory for estimate tensors (default: current directory).
    #[arg(long, requires = "estimate")]
    pub estimate_dir: Option<PathBuf>,
    /// Tolerance of the trajectory consistency check.
    #[arg(long, default_value_t = oasis_core::spi::TRAJECTORY_TOL)]
    pub tol: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}

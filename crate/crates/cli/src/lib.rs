//! Command implementations behind the `ppimesh` binary.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 internal error.

pub mod commands;
pub mod config;
pub mod io;

use std::ffi::OsString;
use std::fmt;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use ppimesh::features::Normalization;
use ppimesh::seq::AlphabetMode;

use config::{Family, RunConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_INTERNAL: i32 = 3;

/// Bad flags or parameter values.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

#[derive(Debug, Parser)]
#[command(
    name = "ppimesh",
    version,
    about = "Sequence-only protein interaction prediction with a GO-keyed classifier mesh"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Worker threads (default: one per core)
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// JSON parameter file or a previous run manifest; flags take precedence
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Where to write the run manifest
    #[arg(long, global = true)]
    pub manifest: Option<PathBuf>,
    /// Only log warnings and errors
    #[arg(short, long, global = true)]
    pub quiet: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write 2F-column DCT feature rows for a list of pairs
    Featurize(FeaturizeArgs),
    /// Combine positives, known negatives and sampled random negatives
    BuildDataset(BuildDatasetArgs),
    /// Stratified k-fold cross-validation
    Cv(CvArgs),
    /// SVM grid search over C and gamma
    GridSearch(GridSearchArgs),
    /// Mean CV AUC as a function of F or k
    Sweep(SweepArgs),
    /// Train the GO-keyed classifier mesh
    MeshTrain(MeshTrainArgs),
    /// Score and rank candidate pairs with a trained mesh
    MeshPredict(MeshPredictArgs),
    /// Generate a synthetic corpus with planted signal
    Synth(SynthArgs),
}

#[derive(Debug, Default, Args)]
pub struct FeatFlags {
    /// Retained DCT coefficients per protein (F)
    #[arg(long)]
    pub f: Option<usize>,
    /// per-position (default), per-signal or none
    #[arg(long)]
    pub normalization: Option<Normalization>,
    /// strict or lenient handling of ambiguous residues
    #[arg(long)]
    pub alphabet: Option<AlphabetMode>,
}

impl FeatFlags {
    fn apply(&self, cfg: &mut RunConfig) {
        cfg.f = self.f;
        cfg.normalization = self.normalization;
        cfg.alphabet = self.alphabet;
    }
}

#[derive(Debug, Default, Args)]
pub struct ClfFlags {
    #[arg(long, value_enum)]
    pub classifier: Option<Family>,
    /// SVM soft-margin penalty
    #[arg(long)]
    pub c: Option<f64>,
    /// RBF kernel width
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Neighbours for kNN
    #[arg(long)]
    pub k: Option<usize>,
    /// SMO stopping tolerance
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iterations: Option<usize>,
}

impl ClfFlags {
    fn apply(&self, cfg: &mut RunConfig) {
        cfg.classifier = self.classifier;
        cfg.c = self.c;
        cfg.gamma = self.gamma;
        cfg.k = self.k;
        cfg.tol = self.tol;
        cfg.max_iterations = self.max_iterations;
    }
}

#[derive(Debug, Default, Args)]
pub struct CvFlags {
    #[arg(long)]
    pub folds: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Score above which a pair counts as predicted positive
    #[arg(long)]
    pub threshold: Option<f64>,
}

impl CvFlags {
    fn apply(&self, cfg: &mut RunConfig) {
        cfg.folds = self.folds;
        cfg.seed = self.seed;
        cfg.threshold = self.threshold;
    }
}

/// Feature rows come from a features table or from sequences plus a dataset.
#[derive(Debug, Default, Args)]
pub struct RowInput {
    /// Feature table written by `featurize`
    #[arg(long, conflicts_with_all = ["fasta", "dataset"])]
    pub features: Option<PathBuf>,
    #[arg(long, requires = "dataset")]
    pub fasta: Option<PathBuf>,
    /// Labelled dataset written by `build-dataset`
    #[arg(long, requires = "fasta")]
    pub dataset: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FeaturizeArgs {
    #[arg(long)]
    pub fasta: PathBuf,
    /// Dataset table or two-column pair list
    #[arg(long)]
    pub pairs: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Label for rows of a two-column pair list
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(0..=1))]
    pub label: u8,
    #[command(flatten)]
    pub feat: FeatFlags,
}

#[derive(Debug, Args)]
pub struct BuildDatasetArgs {
    /// Curated interacting pairs
    #[arg(long)]
    pub positives: PathBuf,
    /// Known non-interacting pairs
    #[arg(long)]
    pub negatives: Option<PathBuf>,
    /// Require every id to have a sequence here
    #[arg(long)]
    pub fasta: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Random negatives to sample (default: enough to balance the classes)
    #[arg(long)]
    pub random_negatives: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub allow_imbalance: bool,
    #[arg(long)]
    pub allow_self: bool,
}

#[derive(Debug, Args)]
pub struct CvArgs {
    #[command(flatten)]
    pub input: RowInput,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub feat: FeatFlags,
    #[command(flatten)]
    pub clf: ClfFlags,
    #[command(flatten)]
    pub cv: CvFlags,
}

#[derive(Debug, Args)]
pub struct GridSearchArgs {
    #[command(flatten)]
    pub input: RowInput,
    #[arg(long)]
    pub out: PathBuf,
    /// Comma-separated C values (default 1e-2 ..= 1e6)
    #[arg(long, value_delimiter = ',')]
    pub c_grid: Option<Vec<f64>>,
    /// Comma-separated gamma values (default 1e-9 ..= 1e2)
    #[arg(long, value_delimiter = ',')]
    pub gamma_grid: Option<Vec<f64>>,
    #[command(flatten)]
    pub feat: FeatFlags,
    #[command(flatten)]
    pub clf: ClfFlags,
    #[command(flatten)]
    pub cv: CvFlags,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum SweepParameter {
    /// Frequency budget; needs --fasta and --dataset
    F,
    /// kNN neighbour count
    K,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long, value_enum)]
    pub parameter: SweepParameter,
    /// Comma-separated values to try
    #[arg(long, value_delimiter = ',')]
    pub values: Option<Vec<usize>>,
    #[command(flatten)]
    pub input: RowInput,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub feat: FeatFlags,
    #[command(flatten)]
    pub clf: ClfFlags,
    #[command(flatten)]
    pub cv: CvFlags,
}

#[derive(Debug, Args)]
pub struct MeshTrainArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub fasta: PathBuf,
    /// protein_id, go_id
    #[arg(long)]
    pub annotations: Option<PathBuf>,
    /// child_id, parent_id
    #[arg(long)]
    pub ontology: Option<PathBuf>,
    /// level, cluster_id, protein_id
    #[arg(long)]
    pub clusters: Option<PathBuf>,
    /// Directory for the trained mesh (absent or empty)
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Provenance table (default: <out-dir>/provenance.tsv)
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Ontology root (default: the unique parentless term)
    #[arg(long)]
    pub root: Option<String>,
    #[arg(long)]
    pub max_depth: Option<usize>,
    #[arg(long)]
    pub min_proteins: Option<usize>,
    #[arg(long)]
    pub min_ppis: Option<usize>,
    #[arg(long)]
    pub max_ppis: Option<usize>,
    /// Generic classifier sample size (default: twice --max-ppis)
    #[arg(long)]
    pub generic_size: Option<usize>,
    /// Keep cells that do not beat the generic classifier
    #[arg(long)]
    pub no_prune: bool,
    #[command(flatten)]
    pub feat: FeatFlags,
    #[command(flatten)]
    pub clf: ClfFlags,
    #[command(flatten)]
    pub cv: CvFlags,
}

#[derive(Debug, Args)]
pub struct MeshPredictArgs {
    /// Directory written by mesh-train
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub fasta: PathBuf,
    /// Pairs to score
    #[arg(long)]
    pub candidates: PathBuf,
    #[arg(long)]
    pub annotations: Option<PathBuf>,
    #[arg(long)]
    pub clusters: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Predicted-positive cutoff on the mesh score
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Must match the model when given
    #[command(flatten)]
    pub feat: FeatFlags,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long, default_value_t = 250)]
    pub pairs_per_cell: usize,
    #[arg(long, default_value_t = 100)]
    pub unannotated_pairs: usize,
    /// Pairs held out as prediction candidates
    #[arg(long, default_value_t = 60)]
    pub candidates: usize,
    #[arg(long, default_value_t = 0.1)]
    pub homology_fraction: f64,
    #[arg(long, default_value_t = 0.3)]
    pub motif_strength: f64,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn run_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
        }
    };
    let level = if cli.global.quiet { "warn" } else { "info" };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).try_init();

    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(j) = cli.global.jobs {
        if j == 0 {
            eprintln!("error: --jobs must be at least 1");
            return EXIT_USAGE;
        }
        pool = pool.num_threads(j);
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start worker pool: {e}");
            return EXIT_INTERNAL;
        }
    };
    match catch_unwind(AssertUnwindSafe(|| pool.install(|| commands::execute(&cli)))) {
        Ok(Ok(())) => EXIT_OK,
        Ok(Err(e)) => {
            eprintln!("error: {e:#}");
            exit_code(&e)
        }
        Err(_) => EXIT_INTERNAL,
    }
}

/// Maps an error to 1 (usage), 2 (data) or 3 (internal).
pub fn exit_code(err: &anyhow::Error) -> i32 {
    if err.chain().any(|c| c.is::<UsageError>()) {
        return EXIT_USAGE;
    }
    let data = err.chain().any(|c| {
        c.is::<ppimesh::seq::SeqError>()
            || c.is::<ppimesh::dct::DctError>()
            || c.is::<ppimesh::features::FeatureError>()
            || c.is::<ppimesh::classifier::ClassifierError>()
            || c.is::<ppimesh::metrics::MetricError>()
            || c.is::<ppimesh::validation::ValidationError>()
            || c.is::<ppimesh::dataset::DatasetError>()
            || c.is::<ppimesh::mesh::MeshError>()
            || c.is::<std::io::Error>()
            || c.is::<serde_json::Error>()
    });
    if data {
        EXIT_DATA
    } else {
        EXIT_INTERNAL
    }
}

use std::path::PathBuf;

use clap::Args;
use serde::{Deserialize, Serialize};

/// Copies every field of `$file` into `$flags` where the flag was not given.
macro_rules! fill_from {
    ($flags:expr, $file:expr; $($f:ident),+ $(,)?) => {
        $( if $flags.$f.is_none() { $flags.$f = $file.$f.clone(); } )+
    };
}

#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenDataOpts {
    /// Comma-separated shape kinds (sphere, box, torus, cylinder, union).
    #[arg(long, value_delimiter = ',')]
    pub kinds: Option<Vec<String>>,
    /// Samples per kind.
    #[arg(long)]
    pub count: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Query points stored per sample.
    #[arg(long)]
    pub queries: Option<usize>,
    /// Silhouette viewing axis (x, y or z).
    #[arg(long)]
    pub view: Option<String>,
    #[arg(long)]
    pub resolution: Option<usize>,
    /// Disable scale/translation augmentation.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub no_augment: Option<bool>,
}

impl GenDataOpts {
    pub fn fill_from(&mut self, file: &Self) {
        fill_from!(self, file; kinds, count, seed, out, queries, view, resolution, no_augment);
    }
}

#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainOpts {
    /// 1 (silhouette encoder) or 2 (point-cloud encoder).
    #[arg(long)]
    pub stage: Option<u8>,
    /// Directory written by gen-data.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Checkpoint path.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub queries_per_shape: Option<usize>,
    #[arg(long)]
    pub eval_every: Option<usize>,
    #[arg(long)]
    pub patience: Option<usize>,
    #[arg(long)]
    pub cloud_variants: Option<usize>,
    /// Share of training queries drawn near the surface.
    #[arg(long)]
    pub near_surface: Option<f64>,
    #[arg(long)]
    pub surface_sigma: Option<f64>,
    /// JSON-lines training log; defaults to `<out>.log.jsonl`.
    #[arg(long)]
    pub log: Option<PathBuf>,
}

impl TrainOpts {
    pub fn fill_from(&mut self, file: &Self) {
        fill_from!(self, file; stage, data, out, steps, seed, batch_size, lr, queries_per_shape, eval_every,
            patience, cloud_variants, near_surface, surface_sigma, log);
    }
}

#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MiseOpts {
    /// Coarse cells per axis.
    #[arg(long)]
    pub r0: Option<usize>,
    /// Refinement rounds.
    #[arg(long)]
    pub steps: Option<u32>,
    #[arg(long)]
    pub tau: Option<f64>,
}

impl MiseOpts {
    pub fn fill_from(&mut self, file: &Self) {
        fill_from!(self, file; r0, steps, tau);
    }
}

#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReconstructOpts {
    /// occnet (single network) or doccnet (two networks).
    #[arg(long)]
    pub mode: Option<String>,
    /// Input silhouette (binary PGM).
    #[arg(long)]
    pub image: Option<PathBuf>,
    #[arg(long)]
    pub ckpt1: Option<PathBuf>,
    #[arg(long)]
    pub ckpt2: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Directory for the stage-1 mesh and the intermediate point cloud.
    #[arg(long)]
    pub dump_intermediates: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub mise: MiseOpts,
}

impl ReconstructOpts {
    pub fn fill_from(&mut self, file: &Self) {
        fill_from!(self, file; mode, image, ckpt1, ckpt2, out, dump_intermediates, seed);
        self.mise.fill_from(&file.mise);
    }
}

#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Mesh2pcOpts {
    #[arg(long = "in")]
    #[serde(rename = "in")]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl Mesh2pcOpts {
    pub fn fill_from(&mut self, file: &Self) {
        fill_from!(self, file; input, n, seed, out);
    }
}

#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExtractOpts {
    /// sphere, box, torus, or checkpoint:<path>:<input> where the input is a
    /// silhouette (.pgm) or point cloud (.xyz/.ply) to encode.
    #[arg(long)]
    pub field: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Evaluate the full final-resolution lattice instead of refining.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub dense: Option<bool>,
    #[command(flatten)]
    #[serde(flatten)]
    pub mise: MiseOpts,
}

impl ExtractOpts {
    pub fn fill_from(&mut self, file: &Self) {
        fill_from!(self, file; field, out, dense);
        self.mise.fill_from(&file.mise);
    }
}

#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalOpts {
    /// Predicted mesh.
    #[arg(long)]
    pub pred: Option<PathBuf>,
    /// Ground-truth shape spec (JSON, as written by gen-data).
    #[arg(long)]
    pub gt_spec: Option<PathBuf>,
    /// Ground-truth mesh, used when no spec is given.
    #[arg(long)]
    pub gt_mesh: Option<PathBuf>,
    #[arg(long)]
    pub n_samples: Option<usize>,
    #[arg(long)]
    pub n_points: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Report path; printed to stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl EvalOpts {
    pub fn fill_from(&mut self, file: &Self) {
        fill_from!(self, file; pred, gt_spec, gt_mesh, n_samples, n_points, seed, out);
    }
}

/// Contents of a `--config` file: optional global settings plus one table
/// per subcommand, each mirroring that subcommand's flags.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub threads: Option<usize>,
    #[serde(rename = "gen-data")]
    pub gen_data: Option<GenDataOpts>,
    pub train: Option<TrainOpts>,
    pub reconstruct: Option<ReconstructOpts>,
    pub mesh2pc: Option<Mesh2pcOpts>,
    pub extract: Option<ExtractOpts>,
    pub eval: Option<EvalOpts>,
}

impl RunConfig {
    pub fn parse(text: &str) -> std::result::Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

//! The `doccnet` command-line tool.
//!
//! Exit status is 0 on success, 1 when the requested work fails, and 2 for
//! usage errors (bad flags, missing inputs, out-of-range values). Every run
//! echoes its resolved configuration to stderr in the `--config` format.

mod config;

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

pub use config::{EvalOpts, ExtractOpts, GenDataOpts, Mesh2pcOpts, MiseOpts, ReconstructOpts, RunConfig, TrainOpts};

use crate::dataset::{
    generate_dataset, make_smooth_field, Dataset, GenConfig, Primitive, ShapeKind, ShapeSpec, Silhouette, ViewAxis,
    DEFAULT_QUERIES, DEFAULT_RESOLUTION,
};
use crate::error::Error;
use crate::extraction::{evaluate_grid_threaded, extract_mesh_threaded, marching_cubes, MiseConfig, OccupancyField};
use crate::fsutil::write_atomic;
use crate::geometry::io;
use crate::metrics::{
    chamfer_l1_seeded, normal_consistency_seeded, volumetric_iou, MeshSolid, MetricsReport, DEFAULT_IOU_SAMPLES,
    DEFAULT_SURFACE_POINTS,
};
use crate::models::EncoderInput;
use crate::nn::AdamConfig;
use crate::pipeline::{
    evaluate_run, load_network, reconstruct_doccnet, reconstruct_occnet, EvalSettings, Pipeline,
    PipelineConfig, Stage, TrainConfig,
};
use crate::pointcloud_conv::{mesh_to_pointcloud, DEFAULT_CLOUD_POINTS};

/// Environment variable consulted for a seed when neither flag nor config sets one.
pub const SEED_ENV: &str = "OCFK_SEED";

#[derive(Debug, Parser)]
#[command(name = "doccnet", version, about = "Implicit-occupancy reconstruction toolkit")]
struct Cli {
    /// TOML file with one table per subcommand; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads for field evaluation (1 keeps results bitwise reproducible).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, PartialEq, Subcommand)]
pub enum Command {
    /// Generate a synthetic dataset.
    #[command(name = "gen-data")]
    GenData(GenDataOpts),
    /// Train a stage-1 or stage-2 network.
    Train(TrainOpts),
    /// Reconstruct a mesh from a silhouette.
    Reconstruct(ReconstructOpts),
    /// Convert a mesh into a fixed-size point cloud.
    Mesh2pc(Mesh2pcOpts),
    /// Extract a mesh from an analytic or learned occupancy field.
    Extract(ExtractOpts),
    /// Score a mesh against ground truth.
    Eval(EvalOpts),
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Failed(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Failed(e)
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Failed(e) => write!(f, "error: {e}"),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Failed(_) => 1,
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// A subcommand with every option filled in and validated.
#[derive(Debug, Clone, PartialEq)]
pub struct Resolved {
    pub command: Command,
    pub threads: usize,
}

impl Resolved {
    /// The resolved settings in config-file form.
    pub fn echo(&self) -> RunConfig {
        let mut rc = RunConfig {
            threads: Some(self.threads),
            ..Default::default()
        };
        match &self.command {
            Command::GenData(o) => rc.gen_data = Some(o.clone()),
            Command::Train(o) => rc.train = Some(o.clone()),
            Command::Reconstruct(o) => rc.reconstruct = Some(o.clone()),
            Command::Mesh2pc(o) => rc.mesh2pc = Some(o.clone()),
            Command::Extract(o) => rc.extract = Some(o.clone()),
            Command::Eval(o) => rc.eval = Some(o.clone()),
        }
        rc
    }
}

/// Parses `argv` (including the program name), merges the config file and
/// fills defaults.
pub fn parse_args<I, T>(argv: I) -> CliResult<Resolved>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv).map_err(|e| usage(e.to_string()))?;
    let file = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
            RunConfig::parse(&text).map_err(|e| usage(format!("config {}: {e}", path.display())))?
        }
        None => RunConfig::default(),
    };
    let threads = cli.threads.or(file.threads).unwrap_or(1);
    if threads == 0 {
        return Err(usage("threads must be at least 1"));
    }
    let mut command = cli.command;
    match &mut command {
        Command::GenData(o) => {
            o.fill_from(&file.gen_data.unwrap_or_default());
            resolve_gen_data(o)?;
        }
        Command::Train(o) => {
            o.fill_from(&file.train.unwrap_or_default());
            resolve_train(o)?;
        }
        Command::Reconstruct(o) => {
            o.fill_from(&file.reconstruct.unwrap_or_default());
            resolve_reconstruct(o)?;
        }
        Command::Mesh2pc(o) => {
            o.fill_from(&file.mesh2pc.unwrap_or_default());
            resolve_mesh2pc(o)?;
        }
        Command::Extract(o) => {
            o.fill_from(&file.extract.unwrap_or_default());
            resolve_extract(o)?;
        }
        Command::Eval(o) => {
            o.fill_from(&file.eval.unwrap_or_default());
            resolve_eval(o)?;
        }
    }
    Ok(Resolved { command, threads })
}

fn default_seed() -> CliResult<u64> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| usage(format!("{SEED_ENV}='{v}' is not an unsigned integer"))),
        Err(_) => Ok(0),
    }
}

fn fill_seed(seed: &mut Option<u64>) -> CliResult<()> {
    if seed.is_none() {
        *seed = Some(default_seed()?);
    }
    Ok(())
}

fn required<'a, T>(v: &'a Option<T>, flag: &str) -> CliResult<&'a T> {
    v.as_ref().ok_or_else(|| usage(format!("missing required --{flag}")))
}

fn existing(path: &Option<PathBuf>, flag: &str) -> CliResult<()> {
    let p = required(path, flag)?;
    if !p.exists() {
        return Err(usage(format!("--{flag} {} does not exist", p.display())));
    }
    Ok(())
}

fn positive(v: Option<usize>, flag: &str) -> CliResult<()> {
    if v == Some(0) {
        return Err(usage(format!("--{flag} must be at least 1")));
    }
    Ok(())
}

fn resolve_gen_data(o: &mut GenDataOpts) -> CliResult<()> {
    let all: Vec<String> = ShapeKind::ALL.iter().map(|k| k.name().to_string()).collect();
    let kinds = o.kinds.get_or_insert(all);
    for k in kinds.iter() {
        k.parse::<ShapeKind>().map_err(|e| usage(e.to_string()))?;
    }
    o.count.get_or_insert(10);
    fill_seed(&mut o.seed)?;
    required(&o.out, "out")?;
    o.queries.get_or_insert(DEFAULT_QUERIES);
    let view = o.view.get_or_insert_with(|| "y".into());
    view.parse::<ViewAxis>().map_err(|e| usage(e.to_string()))?;
    o.resolution.get_or_insert(DEFAULT_RESOLUTION);
    o.no_augment.get_or_insert(false);
    positive(o.count, "count")?;
    if o.queries < Some(2) {
        return Err(usage("--queries must be at least 2"));
    }
    if o.resolution < Some(8) {
        return Err(usage("--resolution must be at least 8"));
    }
    Ok(())
}

fn resolve_train(o: &mut TrainOpts) -> CliResult<()> {
    let stage = *required(&o.stage, "stage")?;
    Stage::from_number(stage).map_err(|e| usage(e.to_string()))?;
    existing(&o.data, "data")?;
    let out = required(&o.out, "out")?.clone();
    let d = TrainConfig::default();
    o.steps.get_or_insert(d.max_steps);
    fill_seed(&mut o.seed)?;
    o.batch_size.get_or_insert(d.batch_size);
    o.lr.get_or_insert(d.adam.lr);
    o.queries_per_shape.get_or_insert(d.queries_per_shape);
    o.eval_every.get_or_insert(d.eval_every);
    o.patience.get_or_insert(d.patience);
    o.cloud_variants.get_or_insert(d.cloud_variants);
    o.near_surface.get_or_insert(d.near_surface);
    o.surface_sigma.get_or_insert(d.surface_sigma);
    o.log.get_or_insert_with(|| PathBuf::from(format!("{}.log.jsonl", out.display())));
    train_config(o).validate().map_err(|e| usage(e.to_string()))
}

fn train_config(o: &TrainOpts) -> TrainConfig {
    let d = TrainConfig::default();
    TrainConfig {
        batch_size: o.batch_size.unwrap_or(d.batch_size),
        adam: AdamConfig {
            lr: o.lr.unwrap_or(d.adam.lr),
            ..d.adam
        },
        max_steps: o.steps.unwrap_or(d.max_steps),
        patience: o.patience.unwrap_or(d.patience),
        eval_every: o.eval_every.unwrap_or(d.eval_every),
        queries_per_shape: o.queries_per_shape.unwrap_or(d.queries_per_shape),
        near_surface: o.near_surface.unwrap_or(d.near_surface),
        surface_sigma: o.surface_sigma.unwrap_or(d.surface_sigma),
        cloud_variants: o.cloud_variants.unwrap_or(d.cloud_variants),
        seed: o.seed.unwrap_or(d.seed),
    }
}

fn resolve_mise(o: &mut MiseOpts) -> CliResult<MiseConfig> {
    let d = MiseConfig::default();
    let cfg = MiseConfig {
        r0: *o.r0.get_or_insert(d.r0),
        steps: *o.steps.get_or_insert(d.steps),
        tau: *o.tau.get_or_insert(d.tau),
    };
    cfg.validate().map_err(|e| match e {
        Error::InvalidInput(m) => usage(m),
        other => usage(other.to_string()),
    })?;
    Ok(cfg)
}

fn resolve_reconstruct(o: &mut ReconstructOpts) -> CliResult<()> {
    let mode = required(&o.mode, "mode")?.clone();
    existing(&o.image, "image")?;
    existing(&o.ckpt1, "ckpt1")?;
    match mode.as_str() {
        "occnet" => {}
        "doccnet" => existing(&o.ckpt2, "ckpt2")?,
        other => return Err(usage(format!("--mode must be occnet or doccnet, got '{other}'"))),
    }
    required(&o.out, "out")?;
    fill_seed(&mut o.seed)?;
    resolve_mise(&mut o.mise)?;
    Ok(())
}

fn resolve_mesh2pc(o: &mut Mesh2pcOpts) -> CliResult<()> {
    existing(&o.input, "in")?;
    o.n.get_or_insert(DEFAULT_CLOUD_POINTS);
    positive(o.n, "n")?;
    fill_seed(&mut o.seed)?;
    required(&o.out, "out")?;
    Ok(())
}

/// Field source named by `--field`.
#[derive(Debug, Clone, PartialEq)]
pub enum FieldSource {
    Analytic(ShapeSpec),
    Checkpoint { path: PathBuf, input: PathBuf },
}

/// Parses `sphere`, `box`, `torus` or `checkpoint:<path>:<input>`.
pub fn parse_field(s: &str) -> CliResult<FieldSource> {
    let analytic = |p: Primitive| Ok(FieldSource::Analytic(ShapeSpec::primitive(p)));
    match s {
        "sphere" => analytic(Primitive::Sphere { radius: 0.4 }),
        "box" => analytic(Primitive::Box { half_extents: [0.3; 3] }),
        "torus" => analytic(Primitive::Torus {
            major_radius: 0.3,
            minor_radius: 0.1,
        }),
        _ => {
            let rest = s
                .strip_prefix("checkpoint:")
                .ok_or_else(|| usage(format!("unknown --field '{s}'")))?;
            let (path, input) = rest
                .rsplit_once(':')
                .ok_or_else(|| usage("--field checkpoint:<path>:<input> needs both parts"))?;
            Ok(FieldSource::Checkpoint {
                path: path.into(),
                input: input.into(),
            })
        }
    }
}

fn resolve_extract(o: &mut ExtractOpts) -> CliResult<()> {
    let field = required(&o.field, "field")?;
    if let FieldSource::Checkpoint { path, input } = parse_field(field)? {
        existing(&Some(path), "field checkpoint")?;
        existing(&Some(input), "field input")?;
    }
    required(&o.out, "out")?;
    o.dense.get_or_insert(false);
    resolve_mise(&mut o.mise)?;
    Ok(())
}

fn resolve_eval(o: &mut EvalOpts) -> CliResult<()> {
    existing(&o.pred, "pred")?;
    match (&o.gt_spec, &o.gt_mesh) {
        (Some(_), Some(_)) => return Err(usage("give only one of --gt-spec and --gt-mesh")),
        (None, None) => return Err(usage("missing required --gt-spec or --gt-mesh")),
        (Some(_), None) => existing(&o.gt_spec, "gt-spec")?,
        (None, Some(_)) => existing(&o.gt_mesh, "gt-mesh")?,
    }
    o.n_samples.get_or_insert(DEFAULT_IOU_SAMPLES);
    o.n_points.get_or_insert(DEFAULT_SURFACE_POINTS);
    positive(o.n_points, "n-points")?;
    if o.n_samples < Some(crate::metrics::MIN_IOU_SAMPLES) {
        return Err(usage(format!("--n-samples must be at least {}", crate::metrics::MIN_IOU_SAMPLES)));
    }
    fill_seed(&mut o.seed)?;
    Ok(())
}

fn write_text(path: &Path, text: &str) -> CliResult<()> {
    Ok(write_atomic(path, text.as_bytes())?)
}

fn load_input(path: &Path) -> CliResult<EncoderInput> {
    let ext = path.extension().map(|e| e.to_string_lossy().to_ascii_lowercase()).unwrap_or_default();
    Ok(match ext.as_str() {
        "pgm" => EncoderInput::Silhouette(Silhouette::read_pgm(fs::File::open(path).map_err(Error::from)?)?),
        _ => EncoderInput::Cloud(io::load_cloud(path)?),
    })
}

/// Runs a resolved subcommand.
pub fn dispatch(r: &Resolved) -> CliResult<()> {
    let threads = r.threads;
    match &r.command {
        Command::GenData(o) => {
            let cfg = GenConfig {
                kinds: o.kinds.iter().flatten().map(|k| k.parse()).collect::<crate::Result<_>>()?,
                count: o.count.unwrap_or(10),
                seed: o.seed.unwrap_or(0),
                queries: o.queries.unwrap_or(DEFAULT_QUERIES),
                view: o.view.as_deref().unwrap_or("y").parse()?,
                resolution: o.resolution.unwrap_or(DEFAULT_RESOLUTION),
                cloud_points: DEFAULT_CLOUD_POINTS,
                augment: !o.no_augment.unwrap_or(false),
            };
            let data = generate_dataset(&cfg)?;
            let out = o.out.as_ref().expect("resolved");
            data.write_to_dir(out)?;
            log::info!("wrote {} samples to {}", data.samples.len(), out.display());
        }
        Command::Train(o) => {
            let stage = Stage::from_number(o.stage.expect("resolved"))?;
            let data = Dataset::load(o.data.as_ref().expect("resolved"))?;
            let cfg = train_config(o);
            let outcome = match stage {
                Stage::One => crate::pipeline::train_stage1(&data, &cfg)?,
                Stage::Two => crate::pipeline::train_stage2(&data, &cfg)?,
            };
            let mut lines = String::new();
            for rec in &outcome.log {
                lines.push_str(&serde_json::to_string(rec).map_err(Error::from)?);
                lines.push('\n');
            }
            write_text(o.log.as_ref().expect("resolved"), &lines)?;
            write_atomic(o.out.as_ref().expect("resolved"), &outcome.checkpoint.to_bytes())?;
            log::info!("best step {} of {}", outcome.best_step, outcome.steps_run);
        }
        Command::Reconstruct(o) => {
            let mise = mise_config(&o.mise);
            let image = Silhouette::read_pgm(fs::File::open(o.image.as_ref().expect("resolved")).map_err(Error::from)?)?;
            let out = o.out.as_ref().expect("resolved");
            if o.mode.as_deref() == Some("occnet") {
                let net = load_network(o.ckpt1.as_ref().expect("resolved"))?;
                let rec = reconstruct_occnet(&image, &net, &mise)?;
                if rec.empty {
                    log::warn!("reconstruction is empty");
                }
                write_text(out, &io::mesh_to_string(&rec.mesh, out))?;
            } else {
                let mut cfg = PipelineConfig::new(o.ckpt1.clone().expect("resolved"), o.ckpt2.clone().expect("resolved"));
                cfg.mise = mise;
                cfg.seed = o.seed.unwrap_or(0);
                cfg.threads = threads;
                let result = reconstruct_doccnet(&image, &Pipeline::load(&cfg)?)?;
                if let Some(dir) = &o.dump_intermediates {
                    write_text(&dir.join("stage1.obj"), &io::write_obj(&result.stage1_mesh))?;
                    write_text(&dir.join("cloud.xyz"), &io::write_xyz(&result.cloud))?;
                }
                write_text(out, &io::mesh_to_string(&result.mesh, out))?;
            }
        }
        Command::Mesh2pc(o) => {
            let mesh = io::load_mesh(o.input.as_ref().expect("resolved"))?;
            let cloud = mesh_to_pointcloud(&mesh, o.n.expect("resolved"), o.seed.unwrap_or(0))?;
            let out = o.out.as_ref().expect("resolved");
            write_text(out, &io::cloud_to_string(&cloud, out))?;
        }
        Command::Extract(o) => {
            let mise = mise_config(&o.mise);
            let dense = o.dense.unwrap_or(false);
            let run = |field: &dyn OccupancyField| -> crate::Result<crate::geometry::TriangleMesh> {
                if dense {
                    let grid = evaluate_grid_threaded(field, mise.final_cells() + 1, threads)?;
                    marching_cubes(&grid, mise.tau)
                } else {
                    extract_mesh_threaded(field, &mise, threads)
                }
            };
            let mesh = match parse_field(o.field.as_deref().expect("resolved"))? {
                FieldSource::Analytic(spec) => run(&make_smooth_field(&spec)?)?,
                FieldSource::Checkpoint { path, input } => {
                    let net = load_network(&path)?;
                    let latent = net.latent(&load_input(&input)?)?;
                    run(&net.field(latent)?)?
                }
            };
            if mesh.is_empty() {
                log::warn!("field never crossed tau; mesh is empty");
            }
            let out = o.out.as_ref().expect("resolved");
            write_text(out, &io::mesh_to_string(&mesh, out))?;
        }
        Command::Eval(o) => {
            let pred = io::load_mesh(o.pred.as_ref().expect("resolved"))?;
            let settings = EvalSettings {
                n_samples: o.n_samples.expect("resolved"),
                n_points: o.n_points.expect("resolved"),
                seed: o.seed.unwrap_or(0),
            };
            let report = if let Some(spec_path) = &o.gt_spec {
                let text = fs::read_to_string(spec_path).map_err(Error::from)?;
                let spec: ShapeSpec = serde_json::from_str(&text).map_err(Error::from)?;
                evaluate_run(&pred, &spec, &settings)?
            } else {
                let gt = io::load_mesh(o.gt_mesh.as_ref().expect("resolved"))?;
                let iou = volumetric_iou(&MeshSolid::new(&pred)?, &MeshSolid::new(&gt)?, settings.n_samples, settings.seed)?;
                let (sp, sg) = (settings.seed.wrapping_add(1), settings.seed.wrapping_add(2));
                MetricsReport {
                    iou,
                    chamfer_l1: chamfer_l1_seeded(&pred, &gt, settings.n_points, sp, sg)?,
                    normal_consistency: normal_consistency_seeded(&pred, &gt, settings.n_points, sp, sg)?,
                    n_samples: settings.n_samples,
                    n_points: settings.n_points,
                    seed: settings.seed,
                }
            };
            match &o.out {
                Some(path) => write_text(path, &report.to_json())?,
                None => println!("{}", report.to_json()),
            }
        }
    }
    Ok(())
}

fn mise_config(o: &MiseOpts) -> MiseConfig {
    let d = MiseConfig::default();
    MiseConfig {
        r0: o.r0.unwrap_or(d.r0),
        steps: o.steps.unwrap_or(d.steps),
        tau: o.tau.unwrap_or(d.tau),
    }
}

/// Full command-line entry point; returns the process exit status.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<T> = argv.into_iter().collect();
    if let Err(e) = Cli::try_parse_from(argv.clone()) {
        if matches!(
            e.kind(),
            clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
        ) {
            print!("{e}");
            return 0;
        }
    }
    let resolved = match parse_args(argv) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("{e}");
            return e.exit_code();
        }
    };
    eprintln!("# resolved config\n{}", resolved.echo().to_toml());
    match dispatch(&resolved) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn resolved(args: &[&str]) -> CliResult<Resolved> {
        parse_args(std::iter::once("doccnet").chain(args.iter().copied()))
    }

    #[test]
    fn extract_defaults() {
        let r = resolved(&["extract", "--field", "sphere", "--tau", "0.5", "--out", "m.obj"]).unwrap();
        let Command::Extract(o) = r.command else { panic!() };
        assert_eq!((o.mise.r0, o.mise.steps, o.mise.tau), (Some(32), Some(2), Some(0.5)));
        assert_eq!(r.threads, 1);
    }

    #[test]
    fn tau_out_of_range() {
        let err = resolved(&["extract", "--field", "sphere", "--tau", "1.5", "--out", "m.obj"]).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("tau must be in (0,1)"), "{err}");
    }

    #[test]
    fn unknown_flag_and_bad_number() {
        assert_eq!(resolved(&["extract", "--bogus"]).unwrap_err().exit_code(), 2);
        let err = resolved(&["extract", "--field", "sphere", "--r0", "many", "--out", "m.obj"]).unwrap_err();
        assert!(err.to_string().contains("r0"), "{err}");
    }

    #[test]
    fn flag_overrides_config_file() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("run.toml");
        fs::write(&cfg, "threads = 1\n[extract]\nfield = \"box\"\ntau = 0.3\nr0 = 16\nout = \"a.obj\"\n").unwrap();
        let r = resolved(&["--config", cfg.to_str().unwrap(), "extract", "--tau", "0.6"]).unwrap();
        let Command::Extract(o) = &r.command else { panic!() };
        assert_eq!(o.mise.tau, Some(0.6));
        assert_eq!(o.mise.r0, Some(16));
        assert_eq!(o.field.as_deref(), Some("box"));
        let echo = r.echo().to_toml();
        assert!(echo.contains("tau = 0.6"), "{echo}");
        // The echo is itself a valid config that reproduces the run.
        fs::write(&cfg, &echo).unwrap();
        let again = resolved(&["--config", cfg.to_str().unwrap(), "extract"]).unwrap();
        assert_eq!(again, r);
    }

    #[test]
    fn unknown_config_key_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("run.toml");
        fs::write(&cfg, "[extract]\nfield = \"box\"\nresolution = 3\n").unwrap();
        let err = resolved(&["--config", cfg.to_str().unwrap(), "extract", "--out", "x.obj"]).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("resolution"), "{err}");
    }

    #[test]
    fn missing_checkpoint_is_usage_error() {
        let dir = tempfile::tempdir().unwrap();
        let img = dir.path().join("in.pgm");
        fs::write(&img, b"P5\n8 8\n255\n").unwrap();
        let err = resolved(&[
            "reconstruct",
            "--mode",
            "occnet",
            "--image",
            img.to_str().unwrap(),
            "--ckpt1",
            "/nonexistent/ck.ocfk",
            "--out",
            "m.obj",
        ])
        .unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn field_parsing() {
        assert!(matches!(parse_field("torus").unwrap(), FieldSource::Analytic(_)));
        assert_eq!(
            parse_field("checkpoint:/tmp/a.ocfk:/tmp/in.pgm").unwrap(),
            FieldSource::Checkpoint {
                path: "/tmp/a.ocfk".into(),
                input: "/tmp/in.pgm".into()
            }
        );
        assert!(parse_field("cube").is_err());
        assert!(parse_field("checkpoint:only").is_err());
    }
}

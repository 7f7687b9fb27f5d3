use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use symtrack_core::eval::{evaluate, filter_border_tracks, DEFAULT_IOU_MIN};
use symtrack_core::io::{self, FrameGeometry};
use symtrack_core::linker::{LinkerConfig, Metric};
use symtrack_core::oracle::{
    detections_from_gt, ingest_local_tracks, local_tracks_from_gt, Dropout, PerturbConfig,
};
use symtrack_core::pipeline::{
    run_ablation, track_recording, AblationConfig, LinkOptions, MaxSkip, DEFAULT_BORDER_MARGIN,
};
use symtrack_core::sim::{simulate, SimConfig, SimKind};

/// Links time-symmetric local cell tracks into identity tracks, scores them,
/// and generates synthetic benchmarks.
#[derive(Parser)]
#[command(name = "symtrack", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic recording with ground-truth tracks.
    Simulate(SimulateArgs),
    /// Derive detections and local tracks from ground-truth tracks.
    Oracle(OracleArgs),
    /// Link local tracks into global tracks.
    Link(LinkArgs),
    /// Score predicted tracks against ground truth.
    Evaluate(EvaluateArgs),
    /// Sweep dropout and tracking range on simulated recordings.
    Ablate(AblateArgs),
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, value_parser = parse_kind)]
    kind: SimKind,
    #[arg(long, default_value_t = 100)]
    frames: u32,
    #[arg(long, default_value_t = 10)]
    objects: usize,
    #[arg(long, default_value_t = 512)]
    width: u32,
    #[arg(long, default_value_t = 512)]
    height: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// JSON file with simulator parameters; command-line flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Write ground truth only, without rendering frames.
    #[arg(long)]
    no_render: bool,
    /// Output directory: manifest.json, frame_*.pgm and ground_truth.ndjson.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct OracleArgs {
    /// Ground-truth global tracks.
    #[arg(long)]
    gt: PathBuf,
    #[arg(long)]
    tr: u32,
    /// none, uniform:R or box:R:L; R may be a fraction such as 1/5.
    #[arg(long, default_value = "none", value_parser = parse_dropout)]
    dropout: Dropout,
    /// Probability that a non-anchor window entry is left empty.
    #[arg(long, default_value_t = 0.0)]
    miss_p: f64,
    /// Largest translation in pixels applied to window entries.
    #[arg(long, default_value_t = 0)]
    jitter: u32,
    /// Largest erosion or dilation in pixels applied to window entries.
    #[arg(long, default_value_t = 0)]
    erode_dilate: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Local-track output file.
    #[arg(long)]
    out: PathBuf,
    /// Also write the surviving detections here.
    #[arg(long)]
    detections_out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum MetricArg {
    Iou,
    Euclidean,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Switch {
    On,
    Off,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BorderArg {
    Keep,
    Drop,
}

#[derive(Args)]
struct LinkArgs {
    /// Local-track input file.
    #[arg(long)]
    local: PathBuf,
    /// Tracking range; must match the input when given.
    #[arg(long)]
    tr: Option<u32>,
    #[arg(long, default_value_t = LinkerConfig::DEFAULT_THRESHOLD)]
    threshold: f64,
    #[arg(long, value_enum, default_value_t = MetricArg::Iou)]
    metric: MetricArg,
    /// Centroid distance at which euclidean similarity reaches zero.
    #[arg(long, default_value_t = LinkerConfig::DEFAULT_D_MAX)]
    d_max: f64,
    /// Largest frame distance to link across: a number, `tr` or `tr+N`.
    #[arg(long, default_value = "tr", value_parser = parse_max_skip)]
    max_skip: MaxSkip,
    #[arg(long, value_enum, default_value_t = Switch::On)]
    interpolate: Switch,
    #[arg(long, value_enum, default_value_t = BorderArg::Keep)]
    border_filter: BorderArg,
    #[arg(long, default_value_t = DEFAULT_BORDER_MARGIN)]
    border_margin: u32,
    /// Global-track output file.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    pred: PathBuf,
    #[arg(long)]
    gt: PathBuf,
    #[arg(long, default_value_t = DEFAULT_IOU_MIN)]
    iou_min: f64,
    /// Drop tracks that leave the field of view from both inputs.
    #[arg(long, value_enum, default_value_t = BorderArg::Keep)]
    border_filter: BorderArg,
    #[arg(long, default_value_t = DEFAULT_BORDER_MARGIN)]
    border_margin: u32,
    /// Also write the JSON report here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AblateArgs {
    #[arg(long, default_value = "amoeboids", value_parser = parse_kind)]
    kind: SimKind,
    #[arg(long, default_value_t = 5)]
    recordings: usize,
    #[arg(long, default_value_t = 100)]
    frames: u32,
    #[arg(long, default_value_t = 10)]
    objects: usize,
    #[arg(long, default_value_t = 512)]
    width: u32,
    #[arg(long, default_value_t = 512)]
    height: u32,
    /// Dropout settings to sweep; repeat or separate with commas.
    #[arg(long, value_delimiter = ',', default_value = "uniform:1/15,uniform:1/5", value_parser = parse_dropout)]
    dropout: Vec<Dropout>,
    /// Tracking ranges to sweep; repeat or separate with commas.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    tr: Vec<u32>,
    #[arg(long, default_value = "tr", value_parser = parse_max_skip)]
    max_skip: MaxSkip,
    #[arg(long, default_value_t = LinkerConfig::DEFAULT_THRESHOLD)]
    threshold: f64,
    #[arg(long, value_enum, default_value_t = MetricArg::Iou)]
    metric: MetricArg,
    #[arg(long, default_value_t = LinkerConfig::DEFAULT_D_MAX)]
    d_max: f64,
    #[arg(long, value_enum, default_value_t = Switch::On)]
    interpolate: Switch,
    #[arg(long, default_value_t = 0.0)]
    miss_p: f64,
    #[arg(long, default_value_t = 0)]
    jitter: u32,
    #[arg(long, default_value_t = DEFAULT_IOU_MIN)]
    iou_min: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// JSON results table.
    #[arg(long)]
    out: PathBuf,
}

fn parse_kind(s: &str) -> std::result::Result<SimKind, String> {
    s.parse().map_err(|e: symtrack_core::Error| e.to_string())
}

fn parse_dropout(s: &str) -> std::result::Result<Dropout, String> {
    s.parse().map_err(|e: symtrack_core::Error| e.to_string())
}

fn parse_max_skip(s: &str) -> std::result::Result<MaxSkip, String> {
    s.parse().map_err(|e: symtrack_core::Error| e.to_string())
}

fn metric(m: MetricArg) -> Metric {
    match m {
        MetricArg::Iou => Metric::MeanIou,
        MetricArg::Euclidean => Metric::Euclidean,
    }
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    io::write_atomic(path, text.as_bytes())?;
    Ok(())
}

fn require_geometry(geometry: Option<FrameGeometry>, path: &Path) -> Result<FrameGeometry> {
    geometry.with_context(|| format!("{}: empty file has no frame geometry", path.display()))
}

fn run_simulate(a: SimulateArgs) -> Result<()> {
    let mut cfg = match &a.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            serde_json::from_str::<SimConfig>(&text)
                .with_context(|| format!("parsing {}", path.display()))?
        }
        None => SimConfig::default(),
    };
    cfg.kind = a.kind;
    cfg.frames = a.frames;
    cfg.n_objects = a.objects;
    cfg.width = a.width;
    cfg.height = a.height;
    cfg.seed = a.seed;
    cfg.skip_render = a.no_render;
    let sim = simulate(&cfg)?;
    if !a.no_render {
        let name = format!("{}-{}", cfg.kind, cfg.seed);
        io::write_recording(&a.out, &name, &sim.recording)?;
    }
    let geometry = FrameGeometry::of(&sim.recording);
    io::write_global_tracks(
        &a.out.join("ground_truth.ndjson"),
        &geometry,
        &sim.ground_truth,
    )?;
    eprintln!(
        "simulated {} frames of {} {} objects into {}",
        cfg.frames,
        cfg.n_objects,
        cfg.kind,
        a.out.display()
    );
    Ok(())
}

fn run_oracle(a: OracleArgs) -> Result<()> {
    let (geometry, gt) = io::read_global_tracks(&a.gt)?;
    let geometry = require_geometry(geometry, &a.gt)?;
    let perturb = PerturbConfig {
        dropout: a.dropout,
        window_miss_p: a.miss_p,
        jitter_px: a.jitter,
        erode_dilate_px: a.erode_dilate,
        seed: a.seed,
        ..PerturbConfig::default()
    };
    let detections = detections_from_gt(&gt, &a.dropout, a.seed)?;
    let local = local_tracks_from_gt(&detections, &gt, a.tr, geometry.frame_count, &perturb)?;
    if let Some(path) = &a.detections_out {
        io::write_detections(path, &geometry, &detections)?;
    }
    io::write_local_tracks(&a.out, &geometry, &local)?;
    eprintln!("wrote {} local tracks to {}", local.len(), a.out.display());
    Ok(())
}

fn run_link(a: LinkArgs) -> Result<()> {
    let (geometry, local) = ingest_local_tracks(&a.local)?;
    let file_tr = local.first().map(|t| t.tr());
    let tr = match (a.tr, file_tr) {
        (Some(flag), Some(file)) if flag != file => {
            bail!(
                "--tr {flag} conflicts with tracking range {file} in {}",
                a.local.display()
            )
        }
        (Some(flag), _) => flag,
        (None, Some(file)) => file,
        (None, None) => 1,
    };
    let mut linker = LinkerConfig::new(tr);
    linker.max_skip = a.max_skip.resolve(tr);
    linker.threshold = a.threshold;
    linker.metric = metric(a.metric);
    linker.d_max = a.d_max;
    linker.validate()?;
    let opts = LinkOptions {
        linker,
        interpolate: a.interpolate == Switch::On,
        border_filter: a.border_filter == BorderArg::Drop,
        border_margin: a.border_margin,
    };
    let Some(geometry) = geometry else {
        // empty input links to an empty output with unknown geometry
        io::write_atomic(&a.out, b"")?;
        eprintln!("no local tracks; wrote empty {}", a.out.display());
        return Ok(());
    };
    let tracks = track_recording(&local, geometry.frame_count, &opts)?;
    if opts.interpolate {
        if let Some(t) = tracks.iter().find(|t| !t.is_contiguous()) {
            bail!("track {} still has a gap after interpolation", t.id);
        }
    }
    io::write_global_tracks(&a.out, &geometry, &tracks)?;
    eprintln!(
        "wrote {} global tracks to {}",
        tracks.len(),
        a.out.display()
    );
    Ok(())
}

fn run_evaluate(a: EvaluateArgs) -> Result<()> {
    let (pred_geometry, mut pred) = io::read_global_tracks(&a.pred)?;
    let (gt_geometry, mut gt) = io::read_global_tracks(&a.gt)?;
    if let (Some(p), Some(g)) = (pred_geometry, gt_geometry) {
        if (p.width, p.height) != (g.width, g.height) {
            bail!(
                "prediction is {}x{} but ground truth is {}x{}",
                p.width,
                p.height,
                g.width,
                g.height
            );
        }
    }
    if a.border_filter == BorderArg::Drop {
        let length = gt_geometry.or(pred_geometry).map_or(0, |g| g.frame_count);
        pred = filter_border_tracks(&pred, length, a.border_margin);
        gt = filter_border_tracks(&gt, length, a.border_margin);
    }
    let report = evaluate(&pred, &gt, a.iou_min)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    if let Some(path) = &a.out {
        write_json(path, &report)?;
    }
    Ok(())
}

fn run_ablate(a: AblateArgs) -> Result<()> {
    if a.tr.is_empty() || a.dropout.is_empty() {
        bail!("--tr and --dropout need at least one value");
    }
    let sim = SimConfig {
        width: a.width,
        height: a.height,
        frames: a.frames,
        ..SimConfig::new(a.kind, a.objects, 0)
    };
    let mut cfg = AblationConfig::new(sim, a.dropout, a.tr);
    cfg.recordings = a.recordings;
    cfg.max_skip = a.max_skip;
    cfg.threshold = a.threshold;
    cfg.metric = metric(a.metric);
    cfg.d_max = a.d_max;
    cfg.interpolate = a.interpolate == Switch::On;
    cfg.perturb = PerturbConfig {
        window_miss_p: a.miss_p,
        jitter_px: a.jitter,
        ..PerturbConfig::default()
    };
    cfg.iou_min = a.iou_min;
    cfg.seed = a.seed;
    let report = run_ablation(&cfg)?;
    write_json(&a.out, &report)?;
    for s in &report.summary {
        eprintln!(
            "{:<24} tr={:<2} skip={:<2} tracking F {:.4} -> {:.4}  segmentation F {:.4} -> {:.4}",
            s.dropout,
            s.tr,
            s.max_skip,
            s.disrupted_tracking_f,
            s.retracked_tracking_f,
            s.disrupted_segmentation_f,
            s.retracked_segmentation_f
        );
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => run_simulate(a),
        Command::Oracle(a) => run_oracle(a),
        Command::Link(a) => run_link(a),
        Command::Evaluate(a) => run_evaluate(a),
        Command::Ablate(a) => run_ablate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

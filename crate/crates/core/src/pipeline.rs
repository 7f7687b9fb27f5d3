//! End-to-end runs: linking with post-processing, and dropout ablations.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{evaluate, filter_border_tracks, EvalReport, DEFAULT_IOU_MIN};
use crate::interpolate::fill_all_gaps;
use crate::linker::{link_recording, LinkerConfig, Metric};
use crate::oracle::{
    detections_from_gt, disrupted_tracks, local_tracks_from_gt, Dropout, PerturbConfig,
};
use crate::sim::{derive_seed, simulate, SimConfig};
use crate::track::{GlobalTrack, LocalTrack};

pub const DEFAULT_BORDER_MARGIN: u32 = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkOptions {
    pub linker: LinkerConfig,
    pub interpolate: bool,
    pub border_filter: bool,
    pub border_margin: u32,
}

impl LinkOptions {
    pub fn new(linker: LinkerConfig) -> Self {
        LinkOptions {
            linker,
            interpolate: true,
            border_filter: false,
            border_margin: DEFAULT_BORDER_MARGIN,
        }
    }
}

/// Links local tracks, fills skipped frames and optionally drops tracks that
/// leave the field of view.
pub fn track_recording(
    local_tracks: &[LocalTrack],
    recording_length: u32,
    opts: &LinkOptions,
) -> Result<Vec<GlobalTrack>> {
    let mut tracks = link_recording(local_tracks, recording_length, &opts.linker)?;
    if opts.interpolate {
        tracks = tracks.iter().map(fill_all_gaps).collect();
    }
    if opts.border_filter {
        tracks = filter_border_tracks(&tracks, recording_length, opts.border_margin);
    }
    Ok(tracks)
}

/// Largest frame distance used by the linker, relative to the tracking range.
/// Always capped at `2 * tr`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaxSkip {
    /// `tr + extra`
    Tr {
        extra: u32,
    },
    Fixed(u32),
}

impl MaxSkip {
    pub fn resolve(self, tr: u32) -> u32 {
        let v = match self {
            MaxSkip::Tr { extra } => tr + extra,
            MaxSkip::Fixed(v) => v,
        };
        v.clamp(1, 2 * tr)
    }
}

impl Default for MaxSkip {
    fn default() -> Self {
        MaxSkip::Tr { extra: 0 }
    }
}

impl FromStr for MaxSkip {
    type Err = Error;

    /// `tr`, `tr+N` or a plain frame count.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidConfig(format!("bad max skip `{s}`; expected tr, tr+N or N"));
        let t = s.trim().to_ascii_lowercase();
        if t == "tr" {
            return Ok(MaxSkip::Tr { extra: 0 });
        }
        if let Some(rest) = t.strip_prefix("tr+") {
            return Ok(MaxSkip::Tr {
                extra: rest.parse().map_err(|_| bad())?,
            });
        }
        t.parse().map(MaxSkip::Fixed).map_err(|_| bad())
    }
}

impl fmt::Display for MaxSkip {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MaxSkip::Tr { extra: 0 } => write!(f, "tr"),
            MaxSkip::Tr { extra } => write!(f, "tr+{extra}"),
            MaxSkip::Fixed(v) => write!(f, "{v}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationConfig {
    /// Template for every recording; its seed is replaced per recording.
    pub sim: SimConfig,
    pub recordings: usize,
    pub dropouts: Vec<Dropout>,
    pub trs: Vec<u32>,
    pub max_skip: MaxSkip,
    pub threshold: f64,
    pub metric: Metric,
    pub d_max: f64,
    pub interpolate: bool,
    /// Local-tracker imperfection; its dropout field is ignored.
    pub perturb: PerturbConfig,
    pub iou_min: f64,
    pub seed: u64,
}

impl AblationConfig {
    pub fn new(sim: SimConfig, dropouts: Vec<Dropout>, trs: Vec<u32>) -> Self {
        AblationConfig {
            sim,
            recordings: 5,
            dropouts,
            trs,
            max_skip: MaxSkip::default(),
            threshold: LinkerConfig::DEFAULT_THRESHOLD,
            metric: Metric::MeanIou,
            d_max: LinkerConfig::DEFAULT_D_MAX,
            interpolate: true,
            perturb: PerturbConfig::default(),
            iou_min: DEFAULT_IOU_MIN,
            seed: 0,
        }
    }
}

/// Scores of one recording under one dropout and tracking range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub recording: usize,
    pub sim_seed: u64,
    pub dropout: String,
    pub tr: u32,
    pub max_skip: u32,
    pub removed_fraction: f64,
    /// Ground truth with the dropped instances removed.
    pub disrupted: EvalReport,
    /// Linked tracks started from the surviving detections.
    pub retracked: EvalReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationSummary {
    pub dropout: String,
    pub tr: u32,
    pub max_skip: u32,
    pub recordings: usize,
    pub disrupted_tracking_f: f64,
    pub retracked_tracking_f: f64,
    pub disrupted_segmentation_f: f64,
    pub retracked_segmentation_f: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationReport {
    pub config: AblationConfig,
    pub rows: Vec<AblationRow>,
    pub summary: Vec<AblationSummary>,
}

fn mean(v: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = v.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        0.0
    } else {
        s / n as f64
    }
}

fn ablate_recording(cfg: &AblationConfig, index: usize) -> Result<Vec<AblationRow>> {
    let sim_seed = derive_seed(cfg.seed, &[21, index as u64]);
    let sim_cfg = SimConfig {
        seed: sim_seed,
        skip_render: true,
        ..cfg.sim.clone()
    };
    let sim = simulate(&sim_cfg)?;
    let gt = &sim.ground_truth;
    let length = sim.recording.length;
    let total: usize = gt
        .iter()
        .map(|t| t.entries.values().filter(|e| !e.mask.is_empty()).count())
        .sum();
    let mut rows = Vec::new();
    for (d_index, dropout) in cfg.dropouts.iter().enumerate() {
        let drop_seed = derive_seed(cfg.seed, &[22, index as u64, d_index as u64]);
        let detections = detections_from_gt(gt, dropout, drop_seed)?;
        let disrupted = evaluate(&disrupted_tracks(&detections, gt)?, gt, cfg.iou_min)?;
        for &tr in &cfg.trs {
            let perturb = PerturbConfig {
                dropout: *dropout,
                seed: derive_seed(cfg.seed, &[23, index as u64, d_index as u64, u64::from(tr)]),
                ..cfg.perturb
            };
            let local = local_tracks_from_gt(&detections, gt, tr, length, &perturb)?;
            let mut linker = LinkerConfig::new(tr);
            linker.max_skip = cfg.max_skip.resolve(tr);
            linker.threshold = cfg.threshold;
            linker.metric = cfg.metric;
            linker.d_max = cfg.d_max;
            let opts = LinkOptions {
                interpolate: cfg.interpolate,
                ..LinkOptions::new(linker.clone())
            };
            let tracks = track_recording(&local, length, &opts)?;
            rows.push(AblationRow {
                recording: index,
                sim_seed,
                dropout: dropout.to_string(),
                tr,
                max_skip: linker.max_skip,
                removed_fraction: if total == 0 {
                    0.0
                } else {
                    1.0 - detections.len() as f64 / total as f64
                },
                disrupted,
                retracked: evaluate(&tracks, gt, cfg.iou_min)?,
            });
        }
    }
    Ok(rows)
}

/// Simulates `recordings` scenes and scores disrupted ground truth against
/// re-tracked output for every dropout and tracking range.
pub fn run_ablation(cfg: &AblationConfig) -> Result<AblationReport> {
    if cfg.trs.contains(&0) {
        return Err(Error::InvalidConfig(
            "tracking range must be at least 1".into(),
        ));
    }
    let per_recording = (0..cfg.recordings)
        .into_par_iter()
        .map(|i| ablate_recording(cfg, i))
        .collect::<Result<Vec<_>>>()?;
    let rows: Vec<AblationRow> = per_recording.into_iter().flatten().collect();
    let mut summary = Vec::new();
    for dropout in &cfg.dropouts {
        let name = dropout.to_string();
        for &tr in &cfg.trs {
            let sel: Vec<&AblationRow> = rows
                .iter()
                .filter(|r| r.dropout == name && r.tr == tr)
                .collect();
            summary.push(AblationSummary {
                dropout: name.clone(),
                tr,
                max_skip: cfg.max_skip.resolve(tr),
                recordings: sel.len(),
                disrupted_tracking_f: mean(sel.iter().map(|r| r.disrupted.tracking.f)),
                retracked_tracking_f: mean(sel.iter().map(|r| r.retracked.tracking.f)),
                disrupted_segmentation_f: mean(sel.iter().map(|r| r.disrupted.segmentation.f)),
                retracked_segmentation_f: mean(sel.iter().map(|r| r.retracked.segmentation.f)),
            });
        }
    }
    Ok(AblationReport {
        config: cfg.clone(),
        rows,
        summary,
    })
}

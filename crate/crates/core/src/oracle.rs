//! Ground-truth stand-in for a detector and a local tracker.
//!
//! Detections are ground-truth instances that survive a dropout model. Each
//! surviving detection gets a local track whose window holds the same cell's
//! ground-truth masks, optionally degraded by missed entries, small
//! translations and boundary erosion or dilation.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Mask, Run};
use crate::io::{read_local_tracks, FrameGeometry};
use crate::sim::seeded;
use crate::track::{window_frames, Detection, GlobalTrack, LocalTrack, TrackEntry};

pub const DEFAULT_BLOCK_LEN: u32 = 7;

// stream labels
const DROPOUT: u64 = 11;
const WINDOW: u64 = 12;

/// Which ground-truth instances are removed before tracking.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Dropout {
    None,
    /// Each instance removed independently with probability `rate`.
    Uniform {
        rate: f64,
    },
    /// Instances removed in runs of `block_len` frames per track, with about
    /// `rate` of all instances removed overall.
    Box {
        rate: f64,
        block_len: u32,
    },
}

impl Dropout {
    pub fn rate(&self) -> f64 {
        match *self {
            Dropout::None => 0.0,
            Dropout::Uniform { rate } | Dropout::Box { rate, .. } => rate,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let rate = self.rate();
        if !(0.0..=1.0).contains(&rate) {
            return Err(Error::InvalidConfig(format!(
                "dropout rate {rate} outside [0, 1]"
            )));
        }
        if let Dropout::Box { rate, block_len } = *self {
            if block_len == 0 {
                return Err(Error::InvalidConfig(
                    "block length must be at least 1".into(),
                ));
            }
            if rate >= 1.0 {
                return Err(Error::InvalidConfig(
                    "box dropout rate must be below 1".into(),
                ));
            }
        }
        Ok(())
    }
}

fn parse_rate(s: &str) -> Result<f64> {
    let bad = || Error::InvalidConfig(format!("bad dropout rate `{s}`"));
    let rate = match s.split_once(['/', ':']) {
        Some((a, b)) => {
            let a: f64 = a.trim().parse().map_err(|_| bad())?;
            let b: f64 = b.trim().parse().map_err(|_| bad())?;
            a / b
        }
        None => s.trim().parse().map_err(|_| bad())?,
    };
    if rate.is_finite() {
        Ok(rate)
    } else {
        Err(bad())
    }
}

impl FromStr for Dropout {
    type Err = Error;

    /// Accepts `none`, `uniform:R` and `box:R[:L]`, with `R` a decimal or a
    /// fraction such as `1/5`.
    fn from_str(s: &str) -> Result<Self> {
        let mut parts = s.split(':');
        let kind = parts.next().unwrap_or_default().trim().to_ascii_lowercase();
        let rest: Vec<&str> = parts.collect();
        let d = match (kind.as_str(), rest.as_slice()) {
            ("none", []) => Dropout::None,
            ("uniform", [r]) => Dropout::Uniform {
                rate: parse_rate(r)?,
            },
            ("box", [r]) => Dropout::Box {
                rate: parse_rate(r)?,
                block_len: DEFAULT_BLOCK_LEN,
            },
            ("box", [r, l]) => Dropout::Box {
                rate: parse_rate(r)?,
                block_len: l
                    .trim()
                    .parse()
                    .map_err(|_| Error::InvalidConfig(format!("bad block length `{l}`")))?,
            },
            _ => {
                return Err(Error::InvalidConfig(format!(
                    "bad dropout `{s}`; expected none, uniform:R or box:R:L"
                )))
            }
        };
        d.validate()?;
        Ok(d)
    }
}

impl fmt::Display for Dropout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Dropout::None => write!(f, "none"),
            Dropout::Uniform { rate } => write!(f, "uniform:{rate}"),
            Dropout::Box { rate, block_len } => write!(f, "box:{rate}:{block_len}"),
        }
    }
}

/// Degradation of the emulated local tracker.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PerturbConfig {
    pub dropout: Dropout,
    /// Probability that a non-anchor window entry is emitted empty.
    pub window_miss_p: f64,
    /// Misses apply only to entries with `|offset| >= miss_min_offset`.
    pub miss_min_offset: u32,
    /// Window entries are translated by a non-zero integer offset with both
    /// components in `[-jitter_px, jitter_px]`.
    pub jitter_px: u32,
    /// Window entries are eroded or dilated by up to this many pixels.
    pub erode_dilate_px: u32,
    pub seed: u64,
}

impl Default for PerturbConfig {
    fn default() -> Self {
        PerturbConfig {
            dropout: Dropout::None,
            window_miss_p: 0.0,
            miss_min_offset: 1,
            jitter_px: 0,
            erode_dilate_px: 0,
            seed: 0,
        }
    }
}

impl PerturbConfig {
    pub fn validate(&self) -> Result<()> {
        self.dropout.validate()?;
        if !(0.0..=1.0).contains(&self.window_miss_p) {
            return Err(Error::InvalidConfig(format!(
                "window miss probability {} outside [0, 1]",
                self.window_miss_p
            )));
        }
        Ok(())
    }
}

/// Marks removed positions of one track of `n` instances as `true`.
fn box_pattern(n: usize, rate: f64, block_len: usize, rng: &mut impl Rng) -> Vec<bool> {
    let mut removed = vec![false; n];
    if rate <= 0.0 {
        return removed;
    }
    // a block starts at each kept position with probability q; the frame
    // after a block is always kept so blocks never merge
    let q = (rate / (block_len as f64 * (1.0 - rate))).min(1.0);
    let mut i = 0;
    while i < n {
        if rng.gen_bool(q) {
            let end = (i + block_len).min(n);
            removed[i..end].fill(true);
            i = end + 1;
        } else {
            i += 1;
        }
    }
    removed
}

/// Surviving ground-truth instances, numbered from 0 in `(frame, track)`
/// order.
pub fn detections_from_gt(
    gt: &[GlobalTrack],
    dropout: &Dropout,
    seed: u64,
) -> Result<Vec<Detection>> {
    dropout.validate()?;
    let instances: Vec<(u32, usize, &Mask)> = gt
        .iter()
        .enumerate()
        .flat_map(|(i, t)| {
            t.entries
                .iter()
                .filter(|(_, e)| !e.mask.is_empty())
                .map(move |(&f, e)| (f, i, &e.mask))
        })
        .collect();
    let total = instances.len();
    let mut removed: HashSet<(usize, u32)> = HashSet::new();
    match *dropout {
        Dropout::None => {}
        Dropout::Uniform { rate } => {
            for (i, t) in gt.iter().enumerate() {
                let mut rng = seeded(seed, &[DROPOUT, t.id]);
                for (&f, e) in &t.entries {
                    if !e.mask.is_empty() && rng.gen_bool(rate) {
                        removed.insert((i, f));
                    }
                }
            }
        }
        Dropout::Box { rate, block_len } => {
            let mut best: Option<(f64, HashSet<(usize, u32)>)> = None;
            for attempt in 0..1000u64 {
                let mut trial = HashSet::new();
                for (i, t) in gt.iter().enumerate() {
                    let mut rng = seeded(seed, &[DROPOUT, attempt, t.id]);
                    let frames: Vec<u32> = t
                        .entries
                        .iter()
                        .filter(|(_, e)| !e.mask.is_empty())
                        .map(|(&f, _)| f)
                        .collect();
                    let pattern = box_pattern(frames.len(), rate, block_len as usize, &mut rng);
                    for (f, r) in frames.into_iter().zip(pattern) {
                        if r {
                            trial.insert((i, f));
                        }
                    }
                }
                let frac = if total == 0 {
                    0.0
                } else {
                    trial.len() as f64 / total as f64
                };
                let miss = (frac - rate).abs();
                if best.as_ref().is_none_or(|(m, _)| miss < *m) {
                    best = Some((miss, trial));
                }
                if miss <= 0.1 * rate {
                    break;
                }
            }
            removed = best.map(|(_, r)| r).unwrap_or_default();
        }
    }
    let mut survivors: Vec<(u32, usize, &Mask)> = instances
        .into_iter()
        .filter(|(f, i, _)| !removed.contains(&(*i, *f)))
        .collect();
    survivors.sort_by_key(|&(f, i, _)| (f, i));
    Ok(survivors
        .into_iter()
        .enumerate()
        .map(|(id, (frame, _, mask))| Detection {
            id: id as u64,
            frame,
            mask: mask.clone(),
        })
        .collect())
}

/// Index into `gt` of the track each detection's mask belongs to.
pub fn assign_to_gt(detections: &[Detection], gt: &[GlobalTrack]) -> Result<Vec<usize>> {
    let mut by_frame: HashMap<u32, Vec<(usize, &Mask)>> = HashMap::new();
    for (i, t) in gt.iter().enumerate() {
        for (&f, e) in &t.entries {
            by_frame.entry(f).or_default().push((i, &e.mask));
        }
    }
    detections
        .iter()
        .map(|d| {
            by_frame
                .get(&d.frame)
                .and_then(|v| v.iter().find(|(_, m)| !m.is_empty() && **m == d.mask))
                .map(|&(i, _)| i)
                .ok_or(Error::UnknownDetection {
                    detection: d.id,
                    frame: d.frame,
                })
        })
        .collect()
}

/// Ground-truth tracks reduced to the instances that survived dropout. Links
/// of these tracks span the removed frames.
pub fn disrupted_tracks(detections: &[Detection], gt: &[GlobalTrack]) -> Result<Vec<GlobalTrack>> {
    let owners = assign_to_gt(detections, gt)?;
    let mut out: Vec<GlobalTrack> = gt.iter().map(|t| GlobalTrack::new(t.id)).collect();
    for (d, &i) in detections.iter().zip(&owners) {
        out[i]
            .entries
            .insert(d.frame, TrackEntry::detected(d.mask.clone(), Some(d.id)));
    }
    out.retain(|t| !t.is_empty());
    Ok(out)
}

/// Square-neighbourhood dilation by `r` pixels, clipped to the grid.
pub fn dilate(mask: &Mask, r: u32) -> Mask {
    if r == 0 || mask.is_empty() {
        return mask.clone();
    }
    let (w, h) = (mask.width(), mask.height());
    let mut runs = Vec::with_capacity(mask.runs().len() * (2 * r as usize + 1));
    for run in mask.runs() {
        let start = run.start.saturating_sub(r);
        let end = (run.end() + r).min(w);
        for row in run.row.saturating_sub(r)..=(run.row + r).min(h - 1) {
            runs.push(Run::new(row, start, end - start));
        }
    }
    Mask::from_runs(w, h, runs).expect("dilated runs clipped to the grid")
}

/// Square-neighbourhood erosion by `r` pixels; pixels outside the grid count
/// as background.
pub fn erode(mask: &Mask, r: u32) -> Mask {
    if r == 0 || mask.is_empty() {
        return mask.clone();
    }
    let (w, h) = (mask.width(), mask.height());
    // shrink each run horizontally, then keep columns covered on all 2r+1 rows
    let mut rows: Vec<Vec<(u32, u32)>> = vec![Vec::new(); h as usize];
    for run in mask.runs() {
        if run.len > 2 * r {
            rows[run.row as usize].push((run.start + r, run.end() - r));
        }
    }
    let mut out = Vec::new();
    for y in r..h.saturating_sub(r) {
        let mut acc: Vec<(u32, u32)> = rows[(y - r) as usize].clone();
        for yy in y - r + 1..=y + r {
            let other = &rows[yy as usize];
            let mut next = Vec::new();
            let (mut i, mut j) = (0, 0);
            while i < acc.len() && j < other.len() {
                let lo = acc[i].0.max(other[j].0);
                let hi = acc[i].1.min(other[j].1);
                if lo < hi {
                    next.push((lo, hi));
                }
                if acc[i].1 < other[j].1 {
                    i += 1;
                } else {
                    j += 1;
                }
            }
            acc = next;
        }
        out.extend(acc.into_iter().map(|(s, e)| Run::new(y, s, e - s)));
    }
    Mask::from_runs(w, h, out).expect("eroded runs stay inside the grid")
}

fn perturb_mask(mask: &Mask, p: &PerturbConfig, rng: &mut impl Rng) -> Mask {
    let mut m = mask.clone();
    if p.erode_dilate_px > 0 {
        let e = p.erode_dilate_px as i32;
        let r = rng.gen_range(-e..=e);
        m = if r >= 0 {
            dilate(&m, r as u32)
        } else {
            erode(&m, r.unsigned_abs())
        };
    }
    if p.jitter_px > 0 {
        let j = i64::from(p.jitter_px);
        let (dx, dy) = loop {
            let d = (rng.gen_range(-j..=j), rng.gen_range(-j..=j));
            if d != (0, 0) {
                break d;
            }
        };
        m = m.shift(dx, dy);
    }
    m
}

/// One local track per detection, built from the owning ground-truth track.
pub fn local_tracks_from_gt(
    detections: &[Detection],
    gt: &[GlobalTrack],
    tr: u32,
    recording_length: u32,
    perturb: &PerturbConfig,
) -> Result<Vec<LocalTrack>> {
    perturb.validate()?;
    if tr == 0 {
        return Err(Error::InvalidConfig(
            "tracking range must be at least 1".into(),
        ));
    }
    let owners = assign_to_gt(detections, gt)?;
    detections
        .par_iter()
        .zip(owners.par_iter())
        .map(|(d, &owner)| {
            let track = &gt[owner];
            let mut rng = seeded(perturb.seed, &[WINDOW, d.id]);
            let (w, h) = (d.mask.width(), d.mask.height());
            let window: Vec<Mask> = window_frames(d.frame, tr, recording_length)
                .into_iter()
                .map(|wf| {
                    if wf.offset == 0 {
                        return d.mask.clone();
                    }
                    // draw for every entry so padded and unpadded windows
                    // consume the same random stream
                    let miss = rng.gen::<f64>() < perturb.window_miss_p;
                    if wf.is_padding {
                        return Mask::empty(w, h);
                    }
                    let Some(gt_mask) = track.entries.get(&wf.frame).map(|e| &e.mask) else {
                        return Mask::empty(w, h);
                    };
                    if miss && wf.offset.unsigned_abs() >= perturb.miss_min_offset {
                        return Mask::empty(w, h);
                    }
                    perturb_mask(gt_mask, perturb, &mut rng)
                })
                .collect();
            LocalTrack::with_padding(d.clone(), tr, window, recording_length)
        })
        .collect()
}

/// Reads local tracks produced by any tracker in the local-track format.
pub fn ingest_local_tracks(path: &Path) -> Result<(Option<FrameGeometry>, Vec<LocalTrack>)> {
    read_local_tracks(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::track::overlap;

    fn rect(x: u32, y: u32, w: u32, h: u32) -> Mask {
        Mask::from_runs(64, 64, (y..y + h).map(|r| Run::new(r, x, w))).unwrap()
    }

    fn gt_fixture(n_tracks: u64, frames: u32) -> Vec<GlobalTrack> {
        (0..n_tracks)
            .map(|i| {
                let mut t = GlobalTrack::new(i + 1);
                for f in 0..frames {
                    let x = (f % 40) + 2;
                    let y = (i as u32 * 7) % 50 + 2;
                    t.entries
                        .insert(f, TrackEntry::detected(rect(x, y, 6, 5), None));
                }
                t
            })
            .collect()
    }

    #[test]
    fn parse_dropout() {
        assert_eq!("none".parse::<Dropout>().unwrap(), Dropout::None);
        assert_eq!(
            "uniform:1/5".parse::<Dropout>().unwrap(),
            Dropout::Uniform { rate: 0.2 }
        );
        assert_eq!(
            "box:0.2:7".parse::<Dropout>().unwrap(),
            Dropout::Box {
                rate: 0.2,
                block_len: 7
            }
        );
        assert_eq!(
            "box:1/15".parse::<Dropout>().unwrap(),
            Dropout::Box {
                rate: 1.0 / 15.0,
                block_len: 7
            }
        );
        assert!("uniform:1.5".parse::<Dropout>().is_err());
        assert!("box:0.2:0".parse::<Dropout>().is_err());
        assert!("gauss:0.1".parse::<Dropout>().is_err());
    }

    #[test]
    fn zero_rate_keeps_everything() {
        let gt = gt_fixture(3, 20);
        for d in [Dropout::None, Dropout::Uniform { rate: 0.0 }] {
            let dets = detections_from_gt(&gt, &d, 1).unwrap();
            assert_eq!(dets.len(), 60);
            assert_eq!(dets[0].id, 0);
            assert_eq!((dets[1].frame, dets[3].frame), (0, 1));
        }
    }

    #[test]
    fn uniform_rate_matches_target() {
        let gt = gt_fixture(50, 200);
        let dets = detections_from_gt(&gt, &Dropout::Uniform { rate: 0.2 }, 9).unwrap();
        let removed = 1.0 - dets.len() as f64 / 10_000.0;
        assert!((removed - 0.2).abs() <= 0.01, "{removed}");
    }

    #[test]
    fn box_runs_are_bounded_and_rate_close() {
        let gt = gt_fixture(30, 100);
        let d = Dropout::Box {
            rate: 0.2,
            block_len: 7,
        };
        for seed in 0..5 {
            let dets = detections_from_gt(&gt, &d, seed).unwrap();
            let removed = 1.0 - dets.len() as f64 / 3000.0;
            assert!((removed - 0.2).abs() <= 0.02 + 1e-12, "{removed}");
            let owners = assign_to_gt(&dets, &gt).unwrap();
            for (i, _) in gt.iter().enumerate() {
                let kept: std::collections::BTreeSet<u32> = dets
                    .iter()
                    .zip(&owners)
                    .filter(|(_, &o)| o == i)
                    .map(|(d, _)| d.frame)
                    .collect();
                let mut run = 0;
                for f in 0..100 {
                    if kept.contains(&f) {
                        run = 0;
                    } else {
                        run += 1;
                        assert!(run <= 7);
                    }
                }
            }
        }
    }

    #[test]
    fn perfect_oracle_windows_equal_ground_truth() {
        let gt = gt_fixture(2, 12);
        let dets = detections_from_gt(&gt, &Dropout::None, 0).unwrap();
        let lts = local_tracks_from_gt(&dets, &gt, 3, 12, &PerturbConfig::default()).unwrap();
        let owners = assign_to_gt(&dets, &gt).unwrap();
        for (lt, &o) in lts.iter().zip(&owners) {
            for wf in window_frames(lt.frame(), 3, 12) {
                assert_eq!(lt.at_offset(wf.offset), &gt[o].entries[&wf.frame].mask);
            }
        }
    }

    #[test]
    fn unknown_detection_rejected() {
        let gt = gt_fixture(1, 5);
        let stray = Detection {
            id: 9,
            frame: 2,
            mask: rect(50, 50, 3, 3),
        };
        assert!(matches!(
            local_tracks_from_gt(&[stray], &gt, 1, 5, &PerturbConfig::default()),
            Err(Error::UnknownDetection {
                detection: 9,
                frame: 2
            })
        ));
    }

    #[test]
    fn missing_outer_entries_zero_longest_overlap() {
        let gt = gt_fixture(1, 20);
        let dets = detections_from_gt(&gt, &Dropout::None, 0).unwrap();
        let p = PerturbConfig {
            window_miss_p: 1.0,
            miss_min_offset: 2,
            ..Default::default()
        };
        let lts = local_tracks_from_gt(&dets, &gt, 2, 20, &p).unwrap();
        let (a, b) = (&lts[5], &lts[9]);
        let pairs = overlap(a, b).unwrap();
        assert_eq!(pairs.len(), 1);
        assert!(pairs.iter().all(|(x, y)| x.is_empty() && y.is_empty()));
        // shorter gaps still see the unperturbed inner entries
        let pairs = overlap(&lts[5], &lts[6]).unwrap();
        assert!(pairs.iter().any(|(x, y)| x.iou(y).unwrap() == 1.0));
    }

    #[test]
    fn jitter_bounds_pair_iou() {
        let gt = gt_fixture(1, 20);
        let dets = detections_from_gt(&gt, &Dropout::None, 0).unwrap();
        let j = 2;
        let p = PerturbConfig {
            jitter_px: j,
            seed: 4,
            ..Default::default()
        };
        let lts = local_tracks_from_gt(&dets, &gt, 2, 20, &p).unwrap();
        let base = rect(20, 20, 6, 5);
        let floor = base
            .iou(&base.shift(2 * i64::from(j), 2 * i64::from(j)))
            .unwrap();
        for lt in &lts {
            for wf in window_frames(lt.frame(), 2, 20) {
                if wf.offset == 0 || wf.is_padding {
                    continue;
                }
                let iou = lt
                    .at_offset(wf.offset)
                    .iou(&gt[0].entries[&wf.frame].mask)
                    .unwrap();
                assert!(iou < 1.0 && iou > floor, "{iou} vs {floor}");
            }
        }
        for w in lts.windows(2) {
            for (x, y) in overlap(&w[0], &w[1]).unwrap() {
                assert!(x.iou(y).unwrap() >= floor);
            }
        }
    }

    #[test]
    fn morphology() {
        let m = rect(10, 10, 5, 5);
        assert_eq!(dilate(&m, 1), rect(9, 9, 7, 7));
        assert_eq!(erode(&m, 1), rect(11, 11, 3, 3));
        assert_eq!(erode(&dilate(&m, 2), 2), m);
        assert!(erode(&m, 3).is_empty());
        let edge = rect(0, 0, 3, 3);
        assert_eq!(dilate(&edge, 1), rect(0, 0, 4, 4));
    }

    #[test]
    fn oracle_is_deterministic() {
        let gt = gt_fixture(4, 30);
        let p = PerturbConfig {
            dropout: Dropout::Uniform { rate: 0.3 },
            window_miss_p: 0.3,
            jitter_px: 1,
            erode_dilate_px: 1,
            seed: 17,
            ..Default::default()
        };
        let run = || {
            let d = detections_from_gt(&gt, &p.dropout, p.seed).unwrap();
            local_tracks_from_gt(&d, &gt, 2, 30, &p).unwrap()
        };
        assert_eq!(run(), run());
    }
}

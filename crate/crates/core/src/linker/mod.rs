//! Global linking of local tracks into identities.
//!
//! Candidate pairs are scored by the mean per-frame similarity of their local
//! track predictions over the shared frames, gated by a threshold, and
//! assigned with the Hungarian method. Passes run for increasing temporal
//! distance: all `t -> t+1` pairs first, then `t -> t+2` among the ends and
//! starts left unmatched, and so on up to `max_skip`.

mod hungarian;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use hungarian::{hungarian, SimilarityMatrix};

use crate::error::{Error, Result};
use crate::geometry::euclidean_similarity;
use crate::track::{overlap, GlobalTrack, LocalTrack, TrackEntry};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    MeanIou,
    Euclidean,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkerConfig {
    pub tr: u32,
    pub max_skip: u32,
    pub threshold: f64,
    pub metric: Metric,
    /// Distance at which centroid similarity reaches zero (euclidean only).
    pub d_max: f64,
}

impl LinkerConfig {
    pub const DEFAULT_THRESHOLD: f64 = 0.05;
    pub const DEFAULT_D_MAX: f64 = 50.0;

    pub fn new(tr: u32) -> Self {
        LinkerConfig {
            tr,
            max_skip: tr,
            threshold: Self::DEFAULT_THRESHOLD,
            metric: Metric::MeanIou,
            d_max: Self::DEFAULT_D_MAX,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.tr == 0 {
            return Err(Error::InvalidConfig("tr must be at least 1".into()));
        }
        if self.max_skip == 0 || self.max_skip > 2 * self.tr {
            return Err(Error::InvalidConfig(format!(
                "max_skip {} outside 1..={}",
                self.max_skip,
                2 * self.tr
            )));
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(Error::InvalidConfig(format!(
                "threshold {} outside [0, 1]",
                self.threshold
            )));
        }
        if self.metric == Metric::Euclidean && !(self.d_max > 0.0 && self.d_max.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "d_max {} must be positive",
                self.d_max
            )));
        }
        Ok(())
    }
}

/// Mean per-frame similarity of two local tracks over their shared frames.
pub fn overlap_similarity(
    earlier: &LocalTrack,
    later: &LocalTrack,
    metric: Metric,
    d_max: f64,
) -> Result<f64> {
    let pairs = overlap(earlier, later)?;
    let mut sum = 0.0;
    for (a, b) in &pairs {
        sum += match metric {
            Metric::MeanIou => a.iou(b)?,
            Metric::Euclidean => euclidean_similarity(a, b, d_max)?,
        };
    }
    Ok(sum / pairs.len() as f64)
}

/// Gated similarity matrix between local tracks at `t` (rows) and `t + dt` (cols).
pub fn build_matrix(
    rows: &[&LocalTrack],
    cols: &[&LocalTrack],
    delta_t: u32,
    config: &LinkerConfig,
) -> Result<SimilarityMatrix> {
    let values: Vec<Vec<f64>> = rows
        .par_iter()
        .map(|a| {
            cols.iter()
                .map(|b| overlap_similarity(a, b, config.metric, config.d_max))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    let mut matrix = SimilarityMatrix::new(rows.len(), cols.len(), delta_t);
    for (i, row) in values.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            matrix.set(i, j, v, true);
        }
    }
    matrix.gate(config.threshold);
    Ok(matrix)
}

/// A realized link between two local tracks, by index into the linker input.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Match {
    pub from: usize,
    pub to: usize,
    pub delta_t: u32,
    pub similarity: f64,
}

/// Linking state over one recording: which local tracks already have a
/// successor or predecessor.
pub struct Linker<'a> {
    tracks: &'a [LocalTrack],
    config: LinkerConfig,
    by_frame: Vec<Vec<usize>>,
    next: Vec<Option<usize>>,
    prev: Vec<Option<usize>>,
}

impl<'a> Linker<'a> {
    pub fn new(
        tracks: &'a [LocalTrack],
        recording_length: u32,
        config: LinkerConfig,
    ) -> Result<Self> {
        config.validate()?;
        let mut by_frame = vec![Vec::new(); recording_length as usize];
        for (idx, lt) in tracks.iter().enumerate() {
            if lt.tr() != config.tr {
                return Err(Error::InconsistentTrackingRange {
                    expected: config.tr,
                    found: lt.tr(),
                });
            }
            let slot = by_frame.get_mut(lt.frame() as usize).ok_or_else(|| {
                Error::InvalidLocalTrack(format!(
                    "anchor frame {} outside recording of {} frames",
                    lt.frame(),
                    recording_length
                ))
            })?;
            slot.push(idx);
        }
        Ok(Linker {
            tracks,
            config,
            by_frame,
            next: vec![None; tracks.len()],
            prev: vec![None; tracks.len()],
        })
    }

    /// Matches unlinked track ends on frame `t` to unlinked track starts on
    /// frame `t + delta_t`.
    pub fn link_frame_pair(&mut self, t: u32, delta_t: u32) -> Result<Vec<Match>> {
        let target = (t + delta_t) as usize;
        if target >= self.by_frame.len() {
            return Ok(Vec::new());
        }
        let rows: Vec<usize> = self.by_frame[t as usize]
            .iter()
            .copied()
            .filter(|&i| self.next[i].is_none())
            .collect();
        let cols: Vec<usize> = self.by_frame[target]
            .iter()
            .copied()
            .filter(|&i| self.prev[i].is_none())
            .collect();
        if rows.is_empty() || cols.is_empty() {
            return Ok(Vec::new());
        }
        let row_tracks: Vec<&LocalTrack> = rows.iter().map(|&i| &self.tracks[i]).collect();
        let col_tracks: Vec<&LocalTrack> = cols.iter().map(|&i| &self.tracks[i]).collect();
        let matrix = build_matrix(&row_tracks, &col_tracks, delta_t, &self.config)?;
        let matches: Vec<Match> = hungarian(&matrix)
            .into_iter()
            .map(|(r, c)| Match {
                from: rows[r],
                to: cols[c],
                delta_t,
                similarity: matrix.get(r, c),
            })
            .collect();
        for m in &matches {
            self.next[m.from] = Some(m.to);
            self.prev[m.to] = Some(m.from);
        }
        Ok(matches)
    }

    /// One hierarchical pass at temporal distance `delta_t`, sweeping `t` upward.
    pub fn link_pass(&mut self, delta_t: u32) -> Result<Vec<Match>> {
        let len = self.by_frame.len() as u32;
        let mut all = Vec::new();
        for t in 0..len.saturating_sub(delta_t) {
            all.extend(self.link_frame_pair(t, delta_t)?);
        }
        Ok(all)
    }

    /// Runs every pass from `delta_t = 1` to `max_skip`.
    pub fn run(&mut self) -> Result<Vec<Match>> {
        let mut all = Vec::new();
        for dt in 1..=self.config.max_skip {
            all.extend(self.link_pass(dt)?);
        }
        Ok(all)
    }

    /// Chains the current links into global tracks. Chains are numbered from 1
    /// in order of their first frame, then input order.
    pub fn tracks(&self) -> Vec<GlobalTrack> {
        let mut out = Vec::new();
        for frame_nodes in &self.by_frame {
            for &start in frame_nodes {
                if self.prev[start].is_some() {
                    continue;
                }
                let mut track = GlobalTrack::new(out.len() as u64 + 1);
                let mut cur = Some(start);
                while let Some(i) = cur {
                    let anchor = self.tracks[i].anchor();
                    track.entries.insert(
                        anchor.frame,
                        TrackEntry::detected(anchor.mask.clone(), Some(anchor.id)),
                    );
                    cur = self.next[i];
                }
                out.push(track);
            }
        }
        out
    }
}

/// Links a recording's local tracks into global tracks with the full
/// hierarchical schedule.
pub fn link_recording(
    local_tracks: &[LocalTrack],
    recording_length: u32,
    config: &LinkerConfig,
) -> Result<Vec<GlobalTrack>> {
    let mut linker = Linker::new(local_tracks, recording_length, config.clone())?;
    linker.run()?;
    Ok(linker.tracks())
}

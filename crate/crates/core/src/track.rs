//! Detections, time-symmetric local tracks and linked global tracks.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Mask;

/// One segmented instance on one frame.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Detection {
    pub id: u64,
    pub frame: u32,
    pub mask: Mask,
}

/// One slot of a local-track window after boundary clamping.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WindowFrame {
    pub offset: i32,
    pub frame: u32,
    pub is_padding: bool,
}

/// Maps offsets `-tr..=tr` around `anchor_frame` onto frames of a recording of
/// `length` frames, repeating the first or last frame past the boundaries.
pub fn window_frames(anchor_frame: u32, tr: u32, length: u32) -> Vec<WindowFrame> {
    let tr = tr as i64;
    let last = i64::from(length.max(1)) - 1;
    (-tr..=tr)
        .map(|offset| {
            let nominal = i64::from(anchor_frame) + offset;
            let frame = nominal.clamp(0, last);
            WindowFrame {
                offset: offset as i32,
                frame: frame as u32,
                is_padding: frame != nominal,
            }
        })
        .collect()
}

/// Predictions of one anchor cell's segmentation on the `2*tr + 1` frames
/// centered on the anchor. An empty mask means "cell not predicted there".
///
/// Entries that fall outside the recording repeat the prediction of the
/// nearest in-range offset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocalTrack {
    anchor: Detection,
    tr: u32,
    window: Vec<Mask>,
}

impl LocalTrack {
    /// Validates a window whose padded entries already mirror their nearest
    /// in-range neighbour.
    pub fn new(
        anchor: Detection,
        tr: u32,
        window: Vec<Mask>,
        recording_length: u32,
    ) -> Result<Self> {
        let lt = LocalTrack { anchor, tr, window };
        lt.validate(recording_length)?;
        Ok(lt)
    }

    /// Builds a window from predictions for each offset, overwriting padded
    /// entries with the prediction of the nearest in-range offset.
    pub fn with_padding(
        anchor: Detection,
        tr: u32,
        mut window: Vec<Mask>,
        recording_length: u32,
    ) -> Result<Self> {
        if window.len() != (2 * tr + 1) as usize {
            return Err(Error::InvalidLocalTrack(format!(
                "window has {} entries, expected {}",
                window.len(),
                2 * tr + 1
            )));
        }
        let frames = window_frames(anchor.frame, tr, recording_length);
        for i in 0..window.len() {
            if frames[i].is_padding {
                let src = mirror_index(&frames, i);
                window[i] = window[src].clone();
            }
        }
        LocalTrack::new(anchor, tr, window, recording_length)
    }

    fn validate(&self, recording_length: u32) -> Result<()> {
        let tr = self.tr;
        if tr == 0 {
            return Err(Error::InvalidLocalTrack(
                "tracking range must be at least 1".into(),
            ));
        }
        if self.window.len() != (2 * tr + 1) as usize {
            return Err(Error::InvalidLocalTrack(format!(
                "window has {} entries, expected {}",
                self.window.len(),
                2 * tr + 1
            )));
        }
        if self.anchor.frame >= recording_length {
            return Err(Error::InvalidLocalTrack(format!(
                "anchor frame {} outside recording of {} frames",
                self.anchor.frame, recording_length
            )));
        }
        if self.anchor.mask.is_empty() {
            return Err(Error::InvalidLocalTrack("anchor mask is empty".into()));
        }
        let (w, h) = (self.anchor.mask.width(), self.anchor.mask.height());
        if self
            .window
            .iter()
            .any(|m| m.width() != w || m.height() != h)
        {
            return Err(Error::InvalidLocalTrack(
                "window mask dimensions differ from anchor".into(),
            ));
        }
        if self.window[tr as usize] != self.anchor.mask {
            return Err(Error::InvalidLocalTrack(
                "offset 0 entry differs from the anchor segmentation".into(),
            ));
        }
        let frames = window_frames(self.anchor.frame, tr, recording_length);
        for (i, f) in frames.iter().enumerate() {
            if f.is_padding && self.window[i] != self.window[mirror_index(&frames, i)] {
                return Err(Error::InvalidLocalTrack(format!(
                    "padded offset {} does not repeat the boundary prediction",
                    f.offset
                )));
            }
        }
        Ok(())
    }

    pub fn anchor(&self) -> &Detection {
        &self.anchor
    }

    pub fn frame(&self) -> u32 {
        self.anchor.frame
    }

    pub fn tr(&self) -> u32 {
        self.tr
    }

    pub fn window(&self) -> &[Mask] {
        &self.window
    }

    /// Prediction at `offset` in `-tr..=tr`.
    pub fn at_offset(&self, offset: i32) -> &Mask {
        &self.window[(offset + self.tr as i32) as usize]
    }
}

// Index of the in-range entry a padded entry repeats.
fn mirror_index(frames: &[WindowFrame], i: usize) -> usize {
    let target = frames[i].frame;
    let center = frames.len() / 2;
    if i < center {
        (i..=center).find(|&j| !frames[j].is_padding && frames[j].frame == target)
    } else {
        (center..=i)
            .rev()
            .find(|&j| !frames[j].is_padding && frames[j].frame == target)
    }
    .unwrap_or(center)
}

/// Mask pairs on the `2*tr + 1 - delta_t` frames shared by a local track at
/// frame `t` and one at `t + delta_t`, in increasing frame order.
pub fn overlap<'a>(
    earlier: &'a LocalTrack,
    later: &'a LocalTrack,
) -> Result<Vec<(&'a Mask, &'a Mask)>> {
    if earlier.tr != later.tr {
        return Err(Error::InconsistentTrackingRange {
            expected: earlier.tr,
            found: later.tr,
        });
    }
    let tr = earlier.tr as i32;
    let delta_t = i64::from(later.frame()) - i64::from(earlier.frame());
    if delta_t < 1 || delta_t > i64::from(2 * tr) {
        return Err(Error::NoOverlap {
            delta_t,
            tr: tr as u32,
            max: 2 * tr as u32,
        });
    }
    let dt = delta_t as i32;
    Ok((dt - tr..=tr)
        .map(|k| (earlier.at_offset(k), later.at_offset(k - dt)))
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Detected,
    Interpolated,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrackEntry {
    pub mask: Mask,
    pub provenance: Provenance,
    /// Source detection, when the entry came from one.
    pub detection: Option<u64>,
}

impl TrackEntry {
    pub fn detected(mask: Mask, detection: Option<u64>) -> Self {
        TrackEntry {
            mask,
            provenance: Provenance::Detected,
            detection,
        }
    }

    pub fn interpolated(mask: Mask) -> Self {
        TrackEntry {
            mask,
            provenance: Provenance::Interpolated,
            detection: None,
        }
    }
}

/// A linked identity: at most one mask per frame.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GlobalTrack {
    pub id: u64,
    pub entries: BTreeMap<u32, TrackEntry>,
}

impl GlobalTrack {
    pub fn new(id: u64) -> Self {
        GlobalTrack {
            id,
            entries: BTreeMap::new(),
        }
    }

    pub fn first_frame(&self) -> Option<u32> {
        self.entries.keys().next().copied()
    }

    pub fn last_frame(&self) -> Option<u32> {
        self.entries.keys().next_back().copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// True when every frame between the first and last entry is present.
    pub fn is_contiguous(&self) -> bool {
        match (self.first_frame(), self.last_frame()) {
            (Some(a), Some(b)) => (b - a + 1) as usize == self.entries.len(),
            _ => true,
        }
    }
}

/// Frame geometry of a recording, with optional 8-bit frames.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Recording {
    pub width: u32,
    pub height: u32,
    pub length: u32,
    pub frames: Option<Vec<GrayImage>>,
}

impl Recording {
    pub fn new(width: u32, height: u32, length: u32) -> Self {
        Recording {
            width,
            height,
            length,
            frames: None,
        }
    }
}

/// Row-major 8-bit grayscale image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    pub width: u32,
    pub height: u32,
    pub pixels: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: u32, height: u32) -> Self {
        GrayImage {
            width,
            height,
            pixels: vec![0; width as usize * height as usize],
        }
    }

    pub fn get(&self, x: u32, y: u32) -> u8 {
        self.pixels[y as usize * self.width as usize + x as usize]
    }
}

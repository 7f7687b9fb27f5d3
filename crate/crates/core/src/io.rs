//! On-disk formats.
//!
//! A recording is a directory with `manifest.json` and one binary PGM (P5)
//! file per frame. Detections, local tracks and global tracks are
//! newline-delimited JSON: a header line naming the format, version and frame
//! geometry, then one record per line. Masks are lists of `[row, start, len]`
//! runs. Every file is written to a temporary sibling and renamed into place.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Mask, Run};
use crate::track::{
    Detection, GlobalTrack, GrayImage, LocalTrack, Provenance, Recording, TrackEntry,
};

pub const FORMAT_VERSION: u32 = 1;
pub const RECORDING_FORMAT: &str = "symtrack-recording";
pub const DETECTIONS_FORMAT: &str = "symtrack-detections";
pub const LOCAL_TRACKS_FORMAT: &str = "symtrack-local-tracks";
pub const GLOBAL_TRACKS_FORMAT: &str = "symtrack-global-tracks";
pub const MANIFEST_FILE: &str = "manifest.json";

/// Writes `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

/// Frame geometry shared by every record of a file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameGeometry {
    pub width: u32,
    pub height: u32,
    pub frame_count: u32,
}

impl FrameGeometry {
    pub fn of(recording: &Recording) -> Self {
        FrameGeometry {
            width: recording.width,
            height: recording.height,
            frame_count: recording.length,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    format: String,
    version: u32,
    width: u32,
    height: u32,
    frame_count: u32,
}

type RunTriple = [u32; 3];

fn runs_of(mask: &Mask) -> Vec<RunTriple> {
    mask.runs()
        .iter()
        .map(|r| [r.row, r.start, r.len])
        .collect()
}

fn mask_from(runs: &[RunTriple], g: &FrameGeometry) -> Result<Mask> {
    Mask::from_runs(
        g.width,
        g.height,
        runs.iter().map(|r| Run::new(r[0], r[1], r[2])),
    )
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DetectionRecord {
    id: u64,
    frame: u32,
    mask: Vec<RunTriple>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LocalTrackRecord {
    detection: u64,
    frame: u32,
    tr: u32,
    window: Vec<Option<Vec<RunTriple>>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EntryRecord {
    frame: u32,
    provenance: Provenance,
    detection: Option<u64>,
    mask: Vec<RunTriple>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GlobalTrackRecord {
    id: u64,
    entries: Vec<EntryRecord>,
}

fn encode<R: Serialize>(
    format: &str,
    g: &FrameGeometry,
    records: impl Iterator<Item = R>,
) -> String {
    let header = Header {
        format: format.to_string(),
        version: FORMAT_VERSION,
        width: g.width,
        height: g.height,
        frame_count: g.frame_count,
    };
    let mut out = serde_json::to_string(&header).expect("header serializes");
    out.push('\n');
    for r in records {
        out.push_str(&serde_json::to_string(&r).expect("record serializes"));
        out.push('\n');
    }
    out
}

fn parse_line<T: DeserializeOwned>(path: &Path, line_no: usize, line: &str) -> Result<T> {
    let mut de = serde_json::Deserializer::from_str(line);
    serde_path_to_error::deserialize(&mut de).map_err(|e| Error::Record {
        path: path.to_path_buf(),
        record: line_no,
        message: format!("at `{}`: {}", e.path(), e.inner()),
    })
}

/// Splits an NDJSON document into its header and `(line number, record)`
/// pairs. Blank lines are skipped; an empty document has no header.
fn decode<T: DeserializeOwned>(
    path: &Path,
    text: &str,
    format: &str,
) -> Result<Option<(FrameGeometry, Vec<(usize, T)>)>> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| !l.trim().is_empty());
    let Some((n, first)) = lines.next() else {
        return Ok(None);
    };
    let header: Header = parse_line(path, n, first)?;
    if header.format != format {
        return Err(Error::format(
            path,
            format!("expected format `{format}`, found `{}`", header.format),
        ));
    }
    if header.version != FORMAT_VERSION {
        return Err(Error::format(
            path,
            format!(
                "unsupported version {} (expected {FORMAT_VERSION})",
                header.version
            ),
        ));
    }
    let g = FrameGeometry {
        width: header.width,
        height: header.height,
        frame_count: header.frame_count,
    };
    let records = lines
        .map(|(n, l)| parse_line(path, n, l).map(|r| (n, r)))
        .collect::<Result<Vec<_>>>()?;
    Ok(Some((g, records)))
}

fn record_error(path: &Path, record: usize, message: impl std::fmt::Display) -> Error {
    Error::Record {
        path: path.to_path_buf(),
        record,
        message: message.to_string(),
    }
}

fn check_frame(path: &Path, n: usize, frame: u32, g: &FrameGeometry) -> Result<()> {
    if frame >= g.frame_count {
        return Err(record_error(
            path,
            n,
            format!(
                "at `frame`: {frame} outside recording of {} frames",
                g.frame_count
            ),
        ));
    }
    Ok(())
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

// ---- detections ----

pub fn detections_to_string(g: &FrameGeometry, detections: &[Detection]) -> String {
    encode(
        DETECTIONS_FORMAT,
        g,
        detections.iter().map(|d| DetectionRecord {
            id: d.id,
            frame: d.frame,
            mask: runs_of(&d.mask),
        }),
    )
}

pub fn detections_from_str(
    path: &Path,
    text: &str,
) -> Result<(Option<FrameGeometry>, Vec<Detection>)> {
    let Some((g, records)) = decode::<DetectionRecord>(path, text, DETECTIONS_FORMAT)? else {
        return Ok((None, Vec::new()));
    };
    let mut out = Vec::with_capacity(records.len());
    for (n, r) in records {
        check_frame(path, n, r.frame, &g)?;
        let mask =
            mask_from(&r.mask, &g).map_err(|e| record_error(path, n, format!("at `mask`: {e}")))?;
        out.push(Detection {
            id: r.id,
            frame: r.frame,
            mask,
        });
    }
    Ok((Some(g), out))
}

pub fn write_detections(path: &Path, g: &FrameGeometry, detections: &[Detection]) -> Result<()> {
    write_atomic(path, detections_to_string(g, detections).as_bytes())
}

pub fn read_detections(path: &Path) -> Result<(Option<FrameGeometry>, Vec<Detection>)> {
    detections_from_str(path, &read_text(path)?)
}

// ---- local tracks ----

pub fn local_tracks_to_string(g: &FrameGeometry, tracks: &[LocalTrack]) -> String {
    encode(
        LOCAL_TRACKS_FORMAT,
        g,
        tracks.iter().map(|t| LocalTrackRecord {
            detection: t.anchor().id,
            frame: t.frame(),
            tr: t.tr(),
            window: t
                .window()
                .iter()
                .map(|m| (!m.is_empty()).then(|| runs_of(m)))
                .collect(),
        }),
    )
}

/// Parses local tracks; every record must share one tracking range.
pub fn local_tracks_from_str(
    path: &Path,
    text: &str,
) -> Result<(Option<FrameGeometry>, Vec<LocalTrack>)> {
    let Some((g, records)) = decode::<LocalTrackRecord>(path, text, LOCAL_TRACKS_FORMAT)? else {
        return Ok((None, Vec::new()));
    };
    let mut out = Vec::with_capacity(records.len());
    let mut tr: Option<u32> = None;
    for (n, r) in records {
        check_frame(path, n, r.frame, &g)?;
        match tr {
            Some(expected) if expected != r.tr => {
                return Err(record_error(
                    path,
                    n,
                    format!(
                        "at `tr`: tracking range {} differs from {expected} of earlier records",
                        r.tr
                    ),
                ))
            }
            _ => tr = Some(r.tr),
        }
        let mut window = Vec::with_capacity(r.window.len());
        for (k, entry) in r.window.iter().enumerate() {
            let mask = match entry {
                Some(runs) => mask_from(runs, &g)
                    .map_err(|e| record_error(path, n, format!("at `window[{k}]`: {e}")))?,
                None => Mask::empty(g.width, g.height),
            };
            window.push(mask);
        }
        let anchor_mask = window
            .get(r.tr as usize)
            .cloned()
            .unwrap_or_else(|| Mask::empty(g.width, g.height));
        let anchor = Detection {
            id: r.detection,
            frame: r.frame,
            mask: anchor_mask,
        };
        let track = LocalTrack::new(anchor, r.tr, window, g.frame_count)
            .map_err(|e| record_error(path, n, format!("at `window`: {e}")))?;
        out.push(track);
    }
    Ok((Some(g), out))
}

pub fn write_local_tracks(path: &Path, g: &FrameGeometry, tracks: &[LocalTrack]) -> Result<()> {
    write_atomic(path, local_tracks_to_string(g, tracks).as_bytes())
}

pub fn read_local_tracks(path: &Path) -> Result<(Option<FrameGeometry>, Vec<LocalTrack>)> {
    local_tracks_from_str(path, &read_text(path)?)
}

// ---- global tracks ----

pub fn global_tracks_to_string(g: &FrameGeometry, tracks: &[GlobalTrack]) -> String {
    encode(
        GLOBAL_TRACKS_FORMAT,
        g,
        tracks.iter().map(|t| GlobalTrackRecord {
            id: t.id,
            entries: t
                .entries
                .iter()
                .map(|(&frame, e)| EntryRecord {
                    frame,
                    provenance: e.provenance,
                    detection: e.detection,
                    mask: runs_of(&e.mask),
                })
                .collect(),
        }),
    )
}

pub fn global_tracks_from_str(
    path: &Path,
    text: &str,
) -> Result<(Option<FrameGeometry>, Vec<GlobalTrack>)> {
    let Some((g, records)) = decode::<GlobalTrackRecord>(path, text, GLOBAL_TRACKS_FORMAT)? else {
        return Ok((None, Vec::new()));
    };
    let mut out = Vec::with_capacity(records.len());
    for (n, r) in records {
        let mut track = GlobalTrack::new(r.id);
        for (k, e) in r.entries.iter().enumerate() {
            if e.frame >= g.frame_count {
                return Err(record_error(
                    path,
                    n,
                    format!(
                        "at `entries[{k}].frame`: {} outside recording of {} frames",
                        e.frame, g.frame_count
                    ),
                ));
            }
            let mask = mask_from(&e.mask, &g)
                .map_err(|err| record_error(path, n, format!("at `entries[{k}].mask`: {err}")))?;
            let entry = TrackEntry {
                mask,
                provenance: e.provenance,
                detection: e.detection,
            };
            if track.entries.insert(e.frame, entry).is_some() {
                return Err(record_error(
                    path,
                    n,
                    format!("at `entries[{k}].frame`: frame {} repeated", e.frame),
                ));
            }
        }
        out.push(track);
    }
    Ok((Some(g), out))
}

pub fn write_global_tracks(path: &Path, g: &FrameGeometry, tracks: &[GlobalTrack]) -> Result<()> {
    write_atomic(path, global_tracks_to_string(g, tracks).as_bytes())
}

pub fn read_global_tracks(path: &Path) -> Result<(Option<FrameGeometry>, Vec<GlobalTrack>)> {
    global_tracks_from_str(path, &read_text(path)?)
}

// ---- recordings ----

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub format: String,
    pub version: u32,
    pub name: String,
    pub width: u32,
    pub height: u32,
    pub frame_count: u32,
    /// File name pattern with one `{index:0N}` placeholder.
    pub frame_pattern: String,
}

impl Manifest {
    pub fn new(name: &str, width: u32, height: u32, frame_count: u32) -> Self {
        let digits = frame_count.saturating_sub(1).to_string().len().max(5);
        Manifest {
            format: RECORDING_FORMAT.to_string(),
            version: FORMAT_VERSION,
            name: name.to_string(),
            width,
            height,
            frame_count,
            frame_pattern: format!("frame_{{index:0{digits}}}.pgm"),
        }
    }

    /// File name of frame `index`.
    pub fn frame_file(&self, index: u32) -> Result<String> {
        let bad = || {
            Error::format(
                MANIFEST_FILE,
                format!(
                    "frame_pattern `{}` needs one `{{index:0N}}` placeholder",
                    self.frame_pattern
                ),
            )
        };
        let open = self.frame_pattern.find("{index:0").ok_or_else(bad)?;
        let rest = &self.frame_pattern[open + 8..];
        let close = rest.find('}').ok_or_else(bad)?;
        let width: usize = rest[..close].parse().map_err(|_| bad())?;
        Ok(format!(
            "{}{:0width$}{}",
            &self.frame_pattern[..open],
            index,
            &rest[close + 1..]
        ))
    }
}

pub fn encode_pgm(image: &GrayImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", image.width, image.height).into_bytes();
    out.extend_from_slice(&image.pixels);
    out
}

pub fn decode_pgm(path: &Path, bytes: &[u8]) -> Result<GrayImage> {
    let mut pos = 0usize;
    let mut token = || -> Option<String> {
        loop {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < bytes.len() && bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
                continue;
            }
            break;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        (pos > start).then(|| String::from_utf8_lossy(&bytes[start..pos]).into_owned())
    };
    let magic = token();
    if magic.as_deref() != Some("P5") {
        return Err(Error::format(path, "not a binary PGM (P5) file"));
    }
    let mut number = |what: &str| -> Result<u32> {
        token()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| Error::format(path, format!("bad PGM {what}")))
    };
    let width = number("width")?;
    let height = number("height")?;
    let maxval = number("maxval")?;
    if maxval != 255 {
        return Err(Error::format(
            path,
            format!("unsupported PGM maxval {maxval}"),
        ));
    }
    // exactly one whitespace byte separates the header from the raster
    let start = pos + 1;
    let expected = width as usize * height as usize;
    if bytes.len() < start || bytes.len() - start != expected {
        return Err(Error::format(
            path,
            format!(
                "PGM raster holds {} bytes, expected {expected}",
                bytes.len().saturating_sub(start)
            ),
        ));
    }
    Ok(GrayImage {
        width,
        height,
        pixels: bytes[start..].to_vec(),
    })
}

/// Writes the manifest and every frame of `recording` into `dir`.
pub fn write_recording(dir: &Path, name: &str, recording: &Recording) -> Result<Manifest> {
    let manifest = Manifest::new(name, recording.width, recording.height, recording.length);
    let frames = recording
        .frames
        .as_ref()
        .ok_or_else(|| Error::format(dir, "recording has no rendered frames"))?;
    if frames.len() != recording.length as usize {
        return Err(Error::format(
            dir,
            format!(
                "{} frames for a recording of length {}",
                frames.len(),
                recording.length
            ),
        ));
    }
    for (t, frame) in frames.iter().enumerate() {
        let file = dir.join(manifest.frame_file(t as u32)?);
        if frame.width != recording.width || frame.height != recording.height {
            return Err(Error::format(
                &file,
                "frame size differs from recording size",
            ));
        }
        write_atomic(&file, &encode_pgm(frame))?;
    }
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
    write_atomic(&dir.join(MANIFEST_FILE), json.as_bytes())?;
    Ok(manifest)
}

pub fn read_recording(dir: &Path) -> Result<(Manifest, Recording)> {
    let manifest_path = dir.join(MANIFEST_FILE);
    let text = read_text(&manifest_path)?;
    let mut de = serde_json::Deserializer::from_str(&text);
    let manifest: Manifest = serde_path_to_error::deserialize(&mut de)
        .map_err(|e| Error::format(&manifest_path, format!("at `{}`: {}", e.path(), e.inner())))?;
    if manifest.format != RECORDING_FORMAT {
        return Err(Error::format(
            &manifest_path,
            format!("unexpected format `{}`", manifest.format),
        ));
    }
    if manifest.version != FORMAT_VERSION {
        return Err(Error::format(
            &manifest_path,
            format!("unsupported version {}", manifest.version),
        ));
    }
    let mut frames = Vec::with_capacity(manifest.frame_count as usize);
    let mut expected: Vec<PathBuf> = Vec::with_capacity(manifest.frame_count as usize);
    for t in 0..manifest.frame_count {
        let file = dir.join(manifest.frame_file(t)?);
        let bytes = fs::read(&file).map_err(|e| Error::io(&file, e))?;
        let image = decode_pgm(&file, &bytes)?;
        if image.width != manifest.width || image.height != manifest.height {
            return Err(Error::format(
                &file,
                format!(
                    "frame is {}x{}, manifest says {}x{}",
                    image.width, image.height, manifest.width, manifest.height
                ),
            ));
        }
        frames.push(image);
        expected.push(file);
    }
    // frame files beyond frame_count mean the manifest is stale
    let extra = manifest.frame_file(manifest.frame_count)?;
    if dir.join(&extra).exists() {
        return Err(Error::format(
            dir.join(extra),
            format!(
                "frame file beyond manifest frame_count {}",
                manifest.frame_count
            ),
        ));
    }
    let recording = Recording {
        width: manifest.width,
        height: manifest.height,
        length: manifest.frame_count,
        frames: Some(frames),
    };
    Ok((manifest, recording))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn geom() -> FrameGeometry {
        FrameGeometry {
            width: 32,
            height: 16,
            frame_count: 10,
        }
    }

    fn rect(x: u32, y: u32, w: u32, h: u32) -> Mask {
        Mask::from_runs(32, 16, (y..y + h).map(|r| Run::new(r, x, w))).unwrap()
    }

    #[test]
    fn detections_round_trip_with_empty_mask() {
        let dets = vec![
            Detection {
                id: 3,
                frame: 0,
                mask: rect(1, 1, 3, 2),
            },
            Detection {
                id: 4,
                frame: 9,
                mask: Mask::empty(32, 16),
            },
        ];
        let text = detections_to_string(&geom(), &dets);
        assert!(text.lines().nth(2).unwrap().contains("\"mask\":[]"));
        let (g, back) = detections_from_str(Path::new("d"), &text).unwrap();
        assert_eq!(g, Some(geom()));
        assert_eq!(back, dets);
        assert_eq!(detections_to_string(&geom(), &back), text);
    }

    #[test]
    fn empty_document_is_empty_set() {
        let (g, d) = detections_from_str(Path::new("d"), "").unwrap();
        assert!(g.is_none() && d.is_empty());
        let (_, t) = local_tracks_from_str(Path::new("l"), "\n").unwrap();
        assert!(t.is_empty());
    }

    #[test]
    fn unknown_version_rejected() {
        let text = detections_to_string(&geom(), &[]).replace("\"version\":1", "\"version\":2");
        let err = detections_from_str(Path::new("d"), &text).unwrap_err();
        assert!(err.to_string().contains("version"), "{err}");
    }

    #[test]
    fn schema_errors_name_record_and_field() {
        let mut text = detections_to_string(&geom(), &[]);
        text.push_str("{\"id\":1,\"frame\":0,\"mask\":[[0,1,2]]}\n");
        text.push_str("{\"id\":2,\"frame\":0,\"mask\":[[0,\"x\",2]]}\n");
        let err = detections_from_str(Path::new("d"), &text).unwrap_err();
        match err {
            Error::Record {
                record, message, ..
            } => {
                assert_eq!(record, 3);
                assert!(message.contains("mask[0][1]"), "{message}");
            }
            other => panic!("unexpected {other}"),
        }
        let mut text = detections_to_string(&geom(), &[]);
        text.push_str("{\"id\":1,\"frame\":10,\"mask\":[]}\n");
        assert!(matches!(
            detections_from_str(Path::new("d"), &text),
            Err(Error::Record { record: 2, .. })
        ));
    }

    #[test]
    fn provenance_survives() {
        let mut t = GlobalTrack::new(7);
        t.entries
            .insert(2, TrackEntry::detected(rect(0, 0, 2, 2), Some(11)));
        t.entries
            .insert(3, TrackEntry::interpolated(rect(1, 0, 2, 2)));
        let text = global_tracks_to_string(&geom(), std::slice::from_ref(&t));
        assert!(text.contains("\"provenance\":\"interpolated\""));
        let (_, back) = global_tracks_from_str(Path::new("g"), &text).unwrap();
        assert_eq!(back, vec![t]);
    }

    #[test]
    fn local_tracks_round_trip_and_mixed_tr_rejected() {
        let cell = |f: u32| rect(f, 2, 4, 4);
        let make = |frame: u32, tr: u32| {
            let window: Vec<Mask> = (-(tr as i32)..=tr as i32)
                .map(|k| {
                    let f = (frame as i32 + k).clamp(0, 9) as u32;
                    if k == 1 {
                        Mask::empty(32, 16)
                    } else {
                        cell(f)
                    }
                })
                .collect();
            let anchor = Detection {
                id: u64::from(frame),
                frame,
                mask: cell(frame),
            };
            LocalTrack::with_padding(anchor, tr, window, 10).unwrap()
        };
        let tracks = vec![make(1, 2), make(5, 2)];
        let text = local_tracks_to_string(&geom(), &tracks);
        assert!(text.contains("null"));
        let (_, back) = local_tracks_from_str(Path::new("l"), &text).unwrap();
        assert_eq!(back, tracks);
        let mixed = local_tracks_to_string(&geom(), &[make(1, 2), make(5, 1)]);
        let err = local_tracks_from_str(Path::new("l"), &mixed).unwrap_err();
        assert!(matches!(err, Error::Record { record: 3, .. }), "{err}");
    }

    #[test]
    fn pgm_round_trip() {
        let mut img = GrayImage::new(5, 3);
        img.pixels
            .iter_mut()
            .enumerate()
            .for_each(|(i, p)| *p = (i * 17) as u8);
        let bytes = encode_pgm(&img);
        assert_eq!(decode_pgm(Path::new("f"), &bytes).unwrap(), img);
        assert!(decode_pgm(Path::new("f"), &bytes[..bytes.len() - 1]).is_err());
    }

    #[test]
    fn frame_names_are_zero_padded() {
        let m = Manifest::new("r", 4, 4, 100);
        assert_eq!(m.frame_file(7).unwrap(), "frame_00007.pgm");
    }

    #[test]
    fn recording_round_trip_and_missing_frame() {
        let dir = tempfile::tempdir().unwrap();
        let mut rec = Recording::new(6, 4, 3);
        rec.frames = Some(
            (0..3u8)
                .map(|t| GrayImage {
                    width: 6,
                    height: 4,
                    pixels: (0..24u8).map(|p| p.wrapping_mul(t + 3)).collect(),
                })
                .collect(),
        );
        let m = write_recording(dir.path(), "tiny", &rec).unwrap();
        let (m2, back) = read_recording(dir.path()).unwrap();
        assert_eq!((m2, back), (m.clone(), rec));
        fs::remove_file(dir.path().join(m.frame_file(1).unwrap())).unwrap();
        let err = read_recording(dir.path()).unwrap_err();
        assert!(err.to_string().contains("frame_00001.pgm"), "{err}");
    }
}

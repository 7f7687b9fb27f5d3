//! Segmentation and link-based tracking F-scores.
//!
//! Predicted and ground-truth masks on the same frame are matched one-to-one
//! by maximum total IOU among pairs reaching `iou_min`. A predicted link
//! (consecutive occurrences of one id) is a true positive when both of its
//! endpoints are matched to the endpoints of the same ground-truth link.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::geometry::Mask;
use crate::linker::{hungarian, SimilarityMatrix};
use crate::track::GlobalTrack;

pub const DEFAULT_IOU_MIN: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Score {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub precision: f64,
    pub recall: f64,
    pub f: f64,
}

impl Score {
    /// Derives precision, recall and F from tallies. With nothing predicted
    /// and nothing to find, all three are 1; otherwise a zero denominator
    /// gives 0.
    pub fn from_counts(tp: u64, fp: u64, fn_: u64) -> Self {
        if tp + fp == 0 && tp + fn_ == 0 {
            return Score {
                tp,
                fp,
                fn_,
                precision: 1.0,
                recall: 1.0,
                f: 1.0,
            };
        }
        let ratio = |num: u64, den: u64| {
            if den == 0 {
                0.0
            } else {
                num as f64 / den as f64
            }
        };
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        let f = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        Score {
            tp,
            fp,
            fn_,
            precision,
            recall,
            f,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub segmentation: Score,
    pub tracking: Score,
}

/// One-to-one matching of predicted to ground-truth masks on a single frame.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameMatch {
    /// `(pred_index, gt_index)` pairs.
    pub pairs: Vec<(usize, usize)>,
    pub false_positives: usize,
    pub false_negatives: usize,
}

pub fn match_frame(pred: &[&Mask], gt: &[&Mask], iou_min: f64) -> Result<FrameMatch> {
    let mut m = SimilarityMatrix::new(pred.len(), gt.len(), 0);
    for (i, p) in pred.iter().enumerate() {
        for (j, g) in gt.iter().enumerate() {
            m.set(i, j, p.iou(g)?, true);
        }
    }
    m.gate(iou_min);
    let pairs = hungarian(&m);
    Ok(FrameMatch {
        false_positives: pred.len() - pairs.len(),
        false_negatives: gt.len() - pairs.len(),
        pairs,
    })
}

/// Consecutive occurrences of one track id.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Link {
    pub track_id: u64,
    pub frame_a: u32,
    pub frame_b: u32,
}

pub fn extract_links(tracks: &[GlobalTrack]) -> Vec<Link> {
    let mut out = Vec::new();
    for t in tracks {
        let frames: Vec<u32> = occupied_frames(t).collect();
        out.extend(frames.windows(2).map(|w| Link {
            track_id: t.id,
            frame_a: w[0],
            frame_b: w[1],
        }));
    }
    out
}

// Empty masks are not segmentations and are skipped throughout.
fn occupied_frames(t: &GlobalTrack) -> impl Iterator<Item = u32> + '_ {
    t.entries
        .iter()
        .filter(|(_, e)| !e.mask.is_empty())
        .map(|(&f, _)| f)
}

type FrameIndex<'a> = BTreeMap<u32, Vec<(u64, &'a Mask)>>;

fn index_by_frame(tracks: &[GlobalTrack]) -> FrameIndex<'_> {
    let mut out: FrameIndex = BTreeMap::new();
    for t in tracks {
        for (&f, e) in &t.entries {
            if !e.mask.is_empty() {
                out.entry(f).or_default().push((t.id, &e.mask));
            }
        }
    }
    out
}

/// Per-frame matching results keyed by `(frame, pred_id) -> gt_id`.
struct Matching {
    assignment: BTreeMap<(u32, u64), u64>,
    seg: Score,
}

fn match_all(pred: &[GlobalTrack], gt: &[GlobalTrack], iou_min: f64) -> Result<Matching> {
    let pred_idx = index_by_frame(pred);
    let gt_idx = index_by_frame(gt);
    let frames: BTreeSet<u32> = pred_idx.keys().chain(gt_idx.keys()).copied().collect();
    let empty = Vec::new();
    let (mut tp, mut fp, mut fn_) = (0u64, 0u64, 0u64);
    let mut assignment = BTreeMap::new();
    for f in frames {
        let p = pred_idx.get(&f).unwrap_or(&empty);
        let g = gt_idx.get(&f).unwrap_or(&empty);
        let pm: Vec<&Mask> = p.iter().map(|x| x.1).collect();
        let gm: Vec<&Mask> = g.iter().map(|x| x.1).collect();
        let fm = match_frame(&pm, &gm, iou_min)?;
        tp += fm.pairs.len() as u64;
        fp += fm.false_positives as u64;
        fn_ += fm.false_negatives as u64;
        for (i, j) in fm.pairs {
            assignment.insert((f, p[i].0), g[j].0);
        }
    }
    Ok(Matching {
        assignment,
        seg: Score::from_counts(tp, fp, fn_),
    })
}

pub fn segmentation_f(pred: &[GlobalTrack], gt: &[GlobalTrack], iou_min: f64) -> Result<Score> {
    Ok(match_all(pred, gt, iou_min)?.seg)
}

fn link_score(matching: &Matching, pred: &[GlobalTrack], gt: &[GlobalTrack]) -> Score {
    let gt_links: BTreeSet<Link> = extract_links(gt).into_iter().collect();
    let pred_links = extract_links(pred);
    let tp = pred_links
        .iter()
        .filter(|l| {
            let a = matching.assignment.get(&(l.frame_a, l.track_id));
            let b = matching.assignment.get(&(l.frame_b, l.track_id));
            match (a, b) {
                (Some(&ga), Some(&gb)) if ga == gb => gt_links.contains(&Link {
                    track_id: ga,
                    frame_a: l.frame_a,
                    frame_b: l.frame_b,
                }),
                _ => false,
            }
        })
        .count() as u64;
    Score::from_counts(tp, pred_links.len() as u64 - tp, gt_links.len() as u64 - tp)
}

pub fn tracking_f(pred: &[GlobalTrack], gt: &[GlobalTrack], iou_min: f64) -> Result<Score> {
    let matching = match_all(pred, gt, iou_min)?;
    Ok(link_score(&matching, pred, gt))
}

/// Segmentation and tracking scores from a single frame-matching sweep.
pub fn evaluate(pred: &[GlobalTrack], gt: &[GlobalTrack], iou_min: f64) -> Result<EvalReport> {
    let matching = match_all(pred, gt, iou_min)?;
    Ok(EvalReport {
        segmentation: matching.seg,
        tracking: link_score(&matching, pred, gt),
    })
}

/// Number of times a predicted track's matched ground-truth identity changes
/// between consecutive matched occurrences.
pub fn identity_switches(pred: &[GlobalTrack], gt: &[GlobalTrack], iou_min: f64) -> Result<usize> {
    let matching = match_all(pred, gt, iou_min)?;
    let mut switches = 0;
    for t in pred {
        let ids: Vec<u64> = t
            .entries
            .keys()
            .filter_map(|&f| matching.assignment.get(&(f, t.id)).copied())
            .collect();
        switches += ids.windows(2).filter(|w| w[0] != w[1]).count();
    }
    Ok(switches)
}

fn touches_band(mask: &Mask, margin: u32) -> bool {
    let Some(b) = mask.bounding_box() else {
        return false;
    };
    let (w, h) = (mask.width(), mask.height());
    b.x0 <= margin || b.y0 <= margin || b.x1 + margin + 1 >= w || b.y1 + margin + 1 >= h
}

/// Drops tracks that leave the field of view: the last mask lies within
/// `margin` pixels of the image edge and the track ends before the final frame.
pub fn filter_border_tracks(
    tracks: &[GlobalTrack],
    recording_length: u32,
    margin: u32,
) -> Vec<GlobalTrack> {
    tracks
        .iter()
        .filter(|t| {
            let Some((&last, entry)) = t.entries.iter().next_back() else {
                return true;
            };
            let exits = last + 1 < recording_length && touches_band(&entry.mask, margin);
            !exits
        })
        .cloned()
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Run;
    use crate::track::TrackEntry;
    use proptest::prelude::*;

    const W: u32 = 64;

    fn rect(x: u32, y: u32, w: u32, h: u32) -> Mask {
        Mask::from_runs(W, W, (y..y + h).map(|r| Run::new(r, x, w))).unwrap()
    }

    fn track(id: u64, frames: &[(u32, Mask)]) -> GlobalTrack {
        let mut t = GlobalTrack::new(id);
        for (f, m) in frames {
            t.entries.insert(*f, TrackEntry::detected(m.clone(), None));
        }
        t
    }

    fn moving(id: u64, frames: impl IntoIterator<Item = u32>, y: u32) -> GlobalTrack {
        let v: Vec<(u32, Mask)> = frames
            .into_iter()
            .map(|f| (f, rect(2 + 3 * f, y, 5, 5)))
            .collect();
        track(id, &v)
    }

    #[test]
    fn perfect_frame_match() {
        let a = rect(0, 0, 4, 4);
        let b = rect(10, 10, 4, 4);
        let fm = match_frame(&[&a, &b], &[&b, &a], 0.5).unwrap();
        assert_eq!(fm.pairs, vec![(0, 1), (1, 0)]);
        assert_eq!((fm.false_positives, fm.false_negatives), (0, 0));
    }

    #[test]
    fn below_threshold_is_fp_and_fn() {
        // 10x10 gt vs 10x4 pred inside it: IOU 0.4
        let gt = rect(0, 0, 10, 10);
        let pred = rect(0, 0, 10, 4);
        assert_eq!(pred.iou(&gt).unwrap(), 0.4);
        let fm = match_frame(&[&pred], &[&gt], 0.5).unwrap();
        assert!(fm.pairs.is_empty());
        assert_eq!((fm.false_positives, fm.false_negatives), (1, 1));
    }

    #[test]
    fn two_preds_one_gt() {
        let gt = rect(0, 0, 10, 10);
        let p1 = rect(0, 0, 10, 6);
        // 55 pixels, all inside gt
        let p2 = rect(0, 0, 10, 5).union(&rect(0, 5, 5, 1)).unwrap();
        assert_eq!(p1.iou(&gt).unwrap(), 0.6);
        assert_eq!(p2.iou(&gt).unwrap(), 0.55);
        let fm = match_frame(&[&p2, &p1], &[&gt], 0.5).unwrap();
        assert_eq!(fm.pairs, vec![(1, 0)]);
        assert_eq!((fm.false_positives, fm.false_negatives), (1, 0));
    }

    #[test]
    fn segmentation_cases() {
        let gt = vec![moving(1, 0..5, 5), moving(2, 0..5, 30)];
        assert_eq!(segmentation_f(&gt, &gt, 0.5).unwrap().f, 1.0);
        assert_eq!(segmentation_f(&[], &gt, 0.5).unwrap().f, 0.0);
        // one of 10 instances missed
        let pred = vec![moving(1, [0, 1, 3, 4], 5), moving(2, 0..5, 30)];
        let s = segmentation_f(&pred, &gt, 0.5).unwrap();
        assert_eq!((s.tp, s.fp, s.fn_), (9, 0, 1));
        assert_eq!(s.precision, 1.0);
        assert_eq!(s.recall, 0.9);
        assert!((s.f - 18.0 / 19.0).abs() < 1e-15);
    }

    #[test]
    fn link_extraction() {
        assert_eq!(extract_links(&[moving(1, 0..5, 5)]).len(), 4);
        assert!(extract_links(&[moving(1, [3], 5)]).is_empty());
        let l = extract_links(&[moving(7, [1, 2, 4], 5)]);
        assert_eq!(
            l,
            vec![
                Link {
                    track_id: 7,
                    frame_a: 1,
                    frame_b: 2
                },
                Link {
                    track_id: 7,
                    frame_a: 2,
                    frame_b: 4
                }
            ]
        );
    }

    #[test]
    fn id_switch_scores() {
        let gt = vec![moving(1, 1..=5, 5)];
        let pred = vec![moving(10, 1..=3, 5), moving(11, 4..=5, 5)];
        let s = tracking_f(&pred, &gt, 0.5).unwrap();
        assert_eq!((s.tp, s.fp, s.fn_), (3, 0, 1));
        assert_eq!(s.precision, 1.0);
        assert_eq!(s.recall, 0.75);
        assert_eq!(s.f, 6.0 / 7.0);
        assert_eq!(identity_switches(&pred, &gt, 0.5).unwrap(), 0);
    }

    #[test]
    fn swapped_ids_cost_two_links_each_way() {
        let a = |f: u32| rect(2 + 3 * f, 5, 5, 5);
        let b = |f: u32| rect(2 + 3 * f, 30, 5, 5);
        let gt = vec![
            track(1, &(0..6).map(|f| (f, a(f))).collect::<Vec<_>>()),
            track(2, &(0..6).map(|f| (f, b(f))).collect::<Vec<_>>()),
        ];
        let pred = vec![
            track(
                1,
                &(0..6)
                    .map(|f| (f, if f < 3 { a(f) } else { b(f) }))
                    .collect::<Vec<_>>(),
            ),
            track(
                2,
                &(0..6)
                    .map(|f| (f, if f < 3 { b(f) } else { a(f) }))
                    .collect::<Vec<_>>(),
            ),
        ];
        let s = tracking_f(&pred, &gt, 0.5).unwrap();
        assert_eq!((s.fp, s.fn_), (2, 2));
        assert_eq!(s.tp, 8);
        assert_eq!(identity_switches(&pred, &gt, 0.5).unwrap(), 2);
    }

    #[test]
    fn gap_spanning_links_are_false_positives() {
        let gt = vec![moving(1, 0..5, 5)];
        let pred = vec![moving(1, [0, 1, 3, 4], 5)];
        let s = tracking_f(&pred, &gt, 0.5).unwrap();
        assert_eq!((s.tp, s.fp, s.fn_), (2, 1, 2));
    }

    #[test]
    fn border_filter() {
        let len = 10;
        let interior = moving(1, 0..10, 20);
        let edge = |f: u32| rect(W - 5, 10 + f, 5, 5);
        let exiting = track(2, &(0..6).map(|f| (f, edge(f))).collect::<Vec<_>>());
        let mut persistent = track(
            3,
            &(0..10).map(|f| (f, rect(20, 20, 5, 5))).collect::<Vec<_>>(),
        );
        persistent
            .entries
            .insert(4, TrackEntry::detected(rect(0, 20, 5, 5), None));
        let ended_inside = track(
            4,
            &(0..5).map(|f| (f, rect(20, 40, 5, 5))).collect::<Vec<_>>(),
        );
        let kept = filter_border_tracks(&[interior, exiting, persistent, ended_inside], len, 2);
        assert_eq!(kept.iter().map(|t| t.id).collect::<Vec<_>>(), vec![1, 3, 4]);
    }

    #[test]
    fn f_score_edge_conventions() {
        assert_eq!(Score::from_counts(0, 0, 0).f, 1.0);
        assert_eq!(Score::from_counts(0, 0, 5).f, 0.0);
        assert_eq!(Score::from_counts(0, 5, 0).f, 0.0);
    }

    fn random_tracks(seed: u64, id_base: u64) -> Vec<GlobalTrack> {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        (0..4)
            .map(|k| {
                let y = 2 + 15 * k as u32;
                let mut frames: Vec<(u32, Mask)> = Vec::new();
                for f in 0..8u32 {
                    if rng.gen_bool(0.8) {
                        frames.push((f, rect(2 + 3 * f + rng.gen_range(0..3), y, 6, 6)));
                    }
                }
                track(id_base + k, &frames)
            })
            .collect()
    }

    proptest! {
        #[test]
        fn swap_roles_swaps_precision_and_recall(s1 in 0u64..500, s2 in 0u64..500) {
            let a = random_tracks(s1, 1);
            let b = random_tracks(s2, 100);
            let ab = evaluate(&a, &b, 0.5).unwrap();
            let ba = evaluate(&b, &a, 0.5).unwrap();
            prop_assert_eq!(ab.tracking.precision, ba.tracking.recall);
            prop_assert_eq!(ab.tracking.recall, ba.tracking.precision);
            prop_assert_eq!(ab.segmentation.precision, ba.segmentation.recall);
            prop_assert!((0.0..=1.0).contains(&ab.tracking.f));
            prop_assert!(ab.tracking.tp <= ab.segmentation.tp);
        }

        #[test]
        fn identical_inputs_score_one(s in 0u64..500) {
            let a = random_tracks(s, 1);
            let r = evaluate(&a, &a, 0.5).unwrap();
            prop_assert_eq!(r.segmentation.f, 1.0);
            prop_assert_eq!(r.tracking.f, 1.0);
        }

        #[test]
        fn dropping_fp_only_tracks(s in 0u64..500) {
            let gt = random_tracks(s, 1);
            let mut pred = gt.clone();
            // a spurious track far from every object
            pred.push(track(99, &[(0, rect(50, 58, 4, 4)), (1, rect(50, 58, 4, 4))]));
            let with = evaluate(&pred, &gt, 0.5).unwrap();
            pred.pop();
            let without = evaluate(&pred, &gt, 0.5).unwrap();
            prop_assert!(without.tracking.recall <= with.tracking.recall);
            prop_assert!(without.tracking.precision >= with.tracking.precision);
        }
    }
}

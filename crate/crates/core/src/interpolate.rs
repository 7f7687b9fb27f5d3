//! Positional linear interpolation of skipped instances.
//!
//! A missing frame `t` between occurrences at `t_last` and `t_next` receives
//! the last mask translated so that its centroid moves to the point linearly
//! interpolated between the two known centroids. The shape is not morphed.

use crate::error::{Error, Result};
use crate::geometry::{Centroid, Mask};
use crate::track::{GlobalTrack, TrackEntry};

/// Endpoints of a frame gap inside one track.
#[derive(Debug, Clone)]
pub struct GapSpec {
    pub t_last: u32,
    pub t_next: u32,
    pub s_last: Mask,
    pub c_last: Centroid,
    pub c_next: Centroid,
}

impl GapSpec {
    pub fn new(t_last: u32, s_last: Mask, t_next: u32, s_next: &Mask) -> Result<Self> {
        Ok(GapSpec {
            t_last,
            t_next,
            c_last: s_last.centroid()?,
            c_next: s_next.centroid()?,
            s_last,
        })
    }

    /// Linearly interpolated centroid at frame `t`.
    pub fn centroid_at(&self, t: u32) -> Centroid {
        let span = f64::from(self.t_next - self.t_last);
        let before = f64::from(t) - f64::from(self.t_last);
        let after = f64::from(self.t_next) - f64::from(t);
        Centroid::new(
            (before * self.c_next.x + after * self.c_last.x) / span,
            (before * self.c_next.y + after * self.c_last.y) / span,
        )
    }

    /// Integer translation applied to `s_last` for frame `t`, rounded half
    /// away from zero.
    pub fn shift_at(&self, t: u32) -> (i64, i64) {
        let c = self.centroid_at(t);
        (
            (c.x - self.c_last.x).round() as i64,
            (c.y - self.c_last.y).round() as i64,
        )
    }
}

pub fn interpolate_frame(gap: &GapSpec, t: u32) -> Result<Mask> {
    if t <= gap.t_last || t >= gap.t_next {
        return Err(Error::InterpolationRange {
            t,
            t_last: gap.t_last,
            t_next: gap.t_next,
        });
    }
    let (dx, dy) = gap.shift_at(t);
    Ok(gap.s_last.shift(dx, dy))
}

/// Fills every interior frame gap of `track`; existing entries are untouched.
///
/// A gap whose bounding entries have empty masks cannot be interpolated and is
/// left open.
pub fn fill_all_gaps(track: &GlobalTrack) -> GlobalTrack {
    let mut out = track.clone();
    let frames: Vec<u32> = track.entries.keys().copied().collect();
    for pair in frames.windows(2) {
        let (t_last, t_next) = (pair[0], pair[1]);
        if t_next - t_last < 2 {
            continue;
        }
        let last = &track.entries[&t_last].mask;
        let next = &track.entries[&t_next].mask;
        let Ok(gap) = GapSpec::new(t_last, last.clone(), t_next, next) else {
            continue;
        };
        for t in t_last + 1..t_next {
            let mask = interpolate_frame(&gap, t).expect("t strictly inside gap");
            out.entries.insert(t, TrackEntry::interpolated(mask));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Run;
    use crate::track::Provenance;
    use proptest::prelude::*;

    fn blob(x: u32, y: u32) -> Mask {
        // 3x3 block whose centroid is (x+1, y+1), plus a tail pixel
        let mut runs: Vec<Run> = (y..y + 3).map(|r| Run::new(r, x, 3)).collect();
        runs.push(Run::new(y + 3, x + 1, 1));
        Mask::from_runs(64, 64, runs).unwrap()
    }

    fn square_at(cx: u32, cy: u32) -> Mask {
        Mask::from_runs(64, 64, (cy - 1..=cy + 1).map(|r| Run::new(r, cx - 1, 3))).unwrap()
    }

    #[test]
    fn eq3_example() {
        let gap = GapSpec::new(2, square_at(10, 10), 5, &square_at(16, 10)).unwrap();
        assert_eq!(gap.centroid_at(3), Centroid::new(12.0, 10.0));
        let m = interpolate_frame(&gap, 3).unwrap();
        assert_eq!(m, square_at(10, 10).shift(2, 0));
        assert_eq!(m.centroid().unwrap(), Centroid::new(12.0, 10.0));
    }

    #[test]
    fn stationary_gap_repeats_mask() {
        let gap = GapSpec::new(0, blob(5, 5), 6, &blob(5, 5)).unwrap();
        for t in 1..6 {
            assert_eq!(interpolate_frame(&gap, t).unwrap(), blob(5, 5));
        }
    }

    #[test]
    fn midpoint_shift() {
        let gap = GapSpec::new(0, blob(5, 5), 2, &blob(9, 7)).unwrap();
        assert_eq!(gap.shift_at(1), (2, 1));
    }

    #[test]
    fn out_of_range_rejected() {
        let gap = GapSpec::new(2, blob(5, 5), 4, &blob(9, 7)).unwrap();
        assert!(interpolate_frame(&gap, 2).is_err());
        assert!(interpolate_frame(&gap, 4).is_err());
        assert!(interpolate_frame(&gap, 3).is_ok());
    }

    #[test]
    fn gap_free_track_unchanged() {
        let mut t = GlobalTrack::new(1);
        for f in 0..4 {
            t.entries
                .insert(f, TrackEntry::detected(blob(f, 2), Some(u64::from(f))));
        }
        assert_eq!(fill_all_gaps(&t), t);
    }

    #[test]
    fn two_frame_gap_on_segment() {
        let mut t = GlobalTrack::new(1);
        t.entries
            .insert(1, TrackEntry::detected(blob(4, 4), Some(0)));
        t.entries
            .insert(4, TrackEntry::detected(blob(13, 10), Some(1)));
        let filled = fill_all_gaps(&t);
        assert!(filled.is_contiguous());
        let gap = GapSpec::new(1, blob(4, 4), 4, &blob(13, 10)).unwrap();
        for f in [2, 3] {
            let e = &filled.entries[&f];
            assert_eq!(e.provenance, Provenance::Interpolated);
            let want = gap.centroid_at(f);
            let got = e.mask.centroid().unwrap();
            assert!((got.x - want.x).abs() <= 0.5 && (got.y - want.y).abs() <= 0.5);
        }
        assert_eq!(filled.entries[&1], t.entries[&1]);
        assert_eq!(fill_all_gaps(&filled), filled);
    }

    #[test]
    fn rigid_motion_recovers_removed_mask() {
        // constant velocity (2, 0) px/frame; frame 3 removed
        let mut t = GlobalTrack::new(1);
        for f in [0u32, 1, 2, 4, 5] {
            t.entries
                .insert(f, TrackEntry::detected(blob(3 + 2 * f, 8), None));
        }
        let filled = fill_all_gaps(&t);
        assert_eq!(filled.entries[&3].mask, blob(9, 8));
    }

    proptest! {
        #[test]
        fn rounding_bound_and_area(
            x0 in 10u32..30, y0 in 10u32..30, x1 in 10u32..30, y1 in 10u32..30,
            t_last in 0u32..5, span in 2u32..9,
        ) {
            let t_next = t_last + span;
            let gap = GapSpec::new(t_last, blob(x0, y0), t_next, &blob(x1, y1)).unwrap();
            for t in t_last + 1..t_next {
                let m = interpolate_frame(&gap, t).unwrap();
                prop_assert_eq!(m.area(), gap.s_last.area());
                let got = m.centroid().unwrap();
                let want = gap.centroid_at(t);
                prop_assert!((got.x - want.x).abs() <= 0.5 + 1e-12);
                prop_assert!((got.y - want.y).abs() <= 0.5 + 1e-12);
            }
        }

        #[test]
        fn time_reversal_mirrors_centroids(
            cx0 in -50.0f64..50.0, cy0 in -50.0f64..50.0, cx1 in -50.0f64..50.0, cy1 in -50.0f64..50.0,
            t_last in 0u32..5, span in 2u32..9,
        ) {
            let t_next = t_last + span;
            let mut fwd = GapSpec::new(t_last, blob(5, 5), t_next, &blob(5, 5)).unwrap();
            fwd.c_last = Centroid::new(cx0, cy0);
            fwd.c_next = Centroid::new(cx1, cy1);
            let mut back = fwd.clone();
            back.c_last = fwd.c_next;
            back.c_next = fwd.c_last;
            for t in t_last + 1..t_next {
                let a = fwd.centroid_at(t);
                let b = back.centroid_at(t_last + t_next - t);
                prop_assert_eq!(a, b);
            }
        }
    }
}

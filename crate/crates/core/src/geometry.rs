//! Binary masks stored as row-wise run-length triples, and the pixel measures
//! built on them.
//!
//! Coordinates are `x = column`, `y = row` everywhere in the crate. A pixel at
//! `(x, y)` is treated as a point at its integer coordinates, so a single set
//! pixel at `(3, 7)` has centroid `(3.0, 7.0)`.

use crate::error::{Error, Result};

/// A horizontal run of set pixels: `len` pixels on `row` starting at `start`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Run {
    pub row: u32,
    pub start: u32,
    pub len: u32,
}

impl Run {
    pub fn new(row: u32, start: u32, len: u32) -> Self {
        Run { row, start, len }
    }

    /// One past the last column covered by the run.
    pub fn end(&self) -> u32 {
        self.start + self.len
    }
}

/// Dense row-major binary image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bitmap {
    width: u32,
    height: u32,
    data: Vec<bool>,
}

impl Bitmap {
    pub fn new(width: u32, height: u32) -> Self {
        Bitmap {
            width,
            height,
            data: vec![false; width as usize * height as usize],
        }
    }

    pub fn from_vec(width: u32, height: u32, data: Vec<bool>) -> Result<Self> {
        let expected = width as usize * height as usize;
        if data.len() != expected {
            return Err(Error::BitmapSize {
                expected,
                actual: data.len(),
            });
        }
        Ok(Bitmap {
            width,
            height,
            data,
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn get(&self, x: u32, y: u32) -> bool {
        self.data[y as usize * self.width as usize + x as usize]
    }

    pub fn set(&mut self, x: u32, y: u32, value: bool) {
        self.data[y as usize * self.width as usize + x as usize] = value;
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.data
    }

    pub fn count_ones(&self) -> u64 {
        self.data.iter().filter(|&&b| b).count() as u64
    }
}

/// Sub-pixel centroid of a non-empty mask.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Centroid {
    pub x: f64,
    pub y: f64,
}

impl Centroid {
    pub fn new(x: f64, y: f64) -> Self {
        Centroid { x, y }
    }

    pub fn distance(&self, other: &Centroid) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Inclusive pixel bounding box.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundingBox {
    pub x0: u32,
    pub y0: u32,
    pub x1: u32,
    pub y1: u32,
}

/// Binary segmentation of one object over a `width x height` grid.
///
/// Runs are canonical: sorted by `(row, start)`, non-empty, inside the grid,
/// and never touching another run on the same row.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Mask {
    width: u32,
    height: u32,
    runs: Vec<Run>,
}

impl Mask {
    pub fn empty(width: u32, height: u32) -> Self {
        Mask {
            width,
            height,
            runs: Vec::new(),
        }
    }

    /// Builds a mask from arbitrary runs, merging overlapping or adjacent ones.
    pub fn from_runs(width: u32, height: u32, runs: impl IntoIterator<Item = Run>) -> Result<Self> {
        let mut runs: Vec<Run> = runs.into_iter().filter(|r| r.len > 0).collect();
        for r in &runs {
            if r.row >= height || u64::from(r.start) + u64::from(r.len) > u64::from(width) {
                return Err(Error::RunOutOfBounds {
                    row: r.row,
                    start: r.start,
                    len: r.len,
                    width,
                    height,
                });
            }
        }
        runs.sort_unstable();
        let mut merged: Vec<Run> = Vec::with_capacity(runs.len());
        for r in runs {
            match merged.last_mut() {
                Some(last) if last.row == r.row && r.start <= last.end() => {
                    let end = last.end().max(r.end());
                    last.len = end - last.start;
                }
                _ => merged.push(r),
            }
        }
        Ok(Mask {
            width,
            height,
            runs: merged,
        })
    }

    /// Like [`Mask::from_runs`] but rejects input that is not already canonical.
    pub fn from_canonical_runs(width: u32, height: u32, runs: Vec<Run>) -> Result<Self> {
        let mask = Mask::from_runs(width, height, runs.iter().copied())?;
        if mask.runs != runs {
            return Err(Error::NonCanonicalRuns);
        }
        Ok(mask)
    }

    pub fn from_pixels(
        width: u32,
        height: u32,
        pixels: impl IntoIterator<Item = (u32, u32)>,
    ) -> Result<Self> {
        Mask::from_runs(
            width,
            height,
            pixels.into_iter().map(|(x, y)| Run::new(y, x, 1)),
        )
    }

    pub fn from_bitmap(bitmap: &Bitmap) -> Self {
        let (w, h) = (bitmap.width, bitmap.height);
        let mut runs = Vec::new();
        for y in 0..h {
            let row = &bitmap.data[(y * w) as usize..((y + 1) * w) as usize];
            let mut x = 0;
            while x < w {
                if row[x as usize] {
                    let start = x;
                    while x < w && row[x as usize] {
                        x += 1;
                    }
                    runs.push(Run::new(y, start, x - start));
                } else {
                    x += 1;
                }
            }
        }
        Mask {
            width: w,
            height: h,
            runs,
        }
    }

    pub fn to_bitmap(&self) -> Bitmap {
        let mut bitmap = Bitmap::new(self.width, self.height);
        for r in &self.runs {
            let base = r.row as usize * self.width as usize;
            bitmap.data[base + r.start as usize..base + r.end() as usize].fill(true);
        }
        bitmap
    }

    /// Rasterizes a closed polygon. A pixel is set when its integer coordinate
    /// lies inside the polygon under the even-odd rule, with half-open edges.
    pub fn from_polygon(width: u32, height: u32, vertices: &[(f64, f64)]) -> Self {
        if vertices.len() < 3 {
            return Mask::empty(width, height);
        }
        let ymin = vertices.iter().map(|v| v.1).fold(f64::INFINITY, f64::min);
        let ymax = vertices
            .iter()
            .map(|v| v.1)
            .fold(f64::NEG_INFINITY, f64::max);
        let row_lo = ymin.ceil().max(0.0) as i64;
        let row_hi = (ymax.floor() as i64).min(height as i64 - 1);
        let mut runs = Vec::new();
        let mut crossings: Vec<f64> = Vec::new();
        for row in row_lo..=row_hi {
            let y = row as f64;
            crossings.clear();
            for i in 0..vertices.len() {
                let (x0, y0) = vertices[i];
                let (x1, y1) = vertices[(i + 1) % vertices.len()];
                if (y0 <= y && y < y1) || (y1 <= y && y < y0) {
                    crossings.push(x0 + (y - y0) * (x1 - x0) / (y1 - y0));
                }
            }
            crossings.sort_by(f64::total_cmp);
            for pair in crossings.chunks_exact(2) {
                let lo = (pair[0].ceil() as i64).max(0);
                let hi = (pair[1].ceil() as i64).min(width as i64);
                if hi > lo {
                    runs.push(Run::new(row as u32, lo as u32, (hi - lo) as u32));
                }
            }
        }
        Mask::from_runs(width, height, runs).expect("clipped runs stay inside the grid")
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn runs(&self) -> &[Run] {
        &self.runs
    }

    pub fn is_empty(&self) -> bool {
        self.runs.is_empty()
    }

    pub fn area(&self) -> u64 {
        self.runs.iter().map(|r| u64::from(r.len)).sum()
    }

    pub fn contains(&self, x: u32, y: u32) -> bool {
        let idx = self.runs.partition_point(|r| (r.row, r.start) <= (y, x));
        idx > 0 && {
            let r = self.runs[idx - 1];
            r.row == y && x < r.end()
        }
    }

    fn check_same_grid(&self, other: &Mask) -> Result<()> {
        if self.width != other.width || self.height != other.height {
            return Err(Error::DimensionMismatch {
                a_width: self.width,
                a_height: self.height,
                b_width: other.width,
                b_height: other.height,
            });
        }
        Ok(())
    }

    /// Number of pixels set in both masks.
    pub fn intersection_area(&self, other: &Mask) -> Result<u64> {
        self.check_same_grid(other)?;
        let (a, b) = (&self.runs, &other.runs);
        let (mut i, mut j, mut total) = (0, 0, 0u64);
        while i < a.len() && j < b.len() {
            let (ra, rb) = (a[i], b[j]);
            if ra.row == rb.row {
                let lo = ra.start.max(rb.start);
                let hi = ra.end().min(rb.end());
                if hi > lo {
                    total += u64::from(hi - lo);
                }
            }
            if (ra.row, ra.end()) <= (rb.row, rb.end()) {
                i += 1;
            } else {
                j += 1;
            }
        }
        Ok(total)
    }

    /// Intersection over union. Two empty masks score 0.
    pub fn iou(&self, other: &Mask) -> Result<f64> {
        let inter = self.intersection_area(other)?;
        let union = self.area() + other.area() - inter;
        if union == 0 {
            return Ok(0.0);
        }
        Ok(inter as f64 / union as f64)
    }

    /// Mean of the set-pixel coordinates, accumulated exactly in integers.
    pub fn centroid(&self) -> Result<Centroid> {
        let mut n: u64 = 0;
        let mut sx: u128 = 0;
        let mut sy: u128 = 0;
        for r in &self.runs {
            let len = u128::from(r.len);
            // sum of start..start+len
            sx += len * u128::from(r.start) + len * (len - 1) / 2;
            sy += len * u128::from(r.row);
            n += u64::from(r.len);
        }
        if n == 0 {
            return Err(Error::EmptyMask);
        }
        Ok(Centroid::new(sx as f64 / n as f64, sy as f64 / n as f64))
    }

    /// Translates every pixel by `(dx, dy)`; pixels leaving the grid are dropped.
    pub fn shift(&self, dx: i64, dy: i64) -> Mask {
        let (w, h) = (i64::from(self.width), i64::from(self.height));
        let runs = self
            .runs
            .iter()
            .filter_map(|r| {
                let row = i64::from(r.row) + dy;
                if row < 0 || row >= h {
                    return None;
                }
                let lo = (i64::from(r.start) + dx).max(0);
                let hi = (i64::from(r.end()) + dx).min(w);
                (hi > lo).then(|| Run::new(row as u32, lo as u32, (hi - lo) as u32))
            })
            .collect();
        Mask {
            width: self.width,
            height: self.height,
            runs,
        }
    }

    pub fn bounding_box(&self) -> Option<BoundingBox> {
        let first = self.runs.first()?;
        let last = self.runs.last()?;
        let x0 = self.runs.iter().map(|r| r.start).min()?;
        let x1 = self.runs.iter().map(|r| r.end() - 1).max()?;
        Some(BoundingBox {
            x0,
            y0: first.row,
            x1,
            y1: last.row,
        })
    }

    /// Pixel-wise union of two masks on the same grid.
    pub fn union(&self, other: &Mask) -> Result<Mask> {
        self.check_same_grid(other)?;
        Mask::from_runs(
            self.width,
            self.height,
            self.runs.iter().chain(other.runs.iter()).copied(),
        )
    }
}

/// Centroid-distance similarity `max(0, 1 - d / d_max)`. Either mask empty gives 0.
pub fn euclidean_similarity(a: &Mask, b: &Mask, d_max: f64) -> Result<f64> {
    a.check_same_grid(b)?;
    let (Ok(ca), Ok(cb)) = (a.centroid(), b.centroid()) else {
        return Ok(0.0);
    };
    Ok((1.0 - ca.distance(&cb) / d_max).max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn block(w: u32, h: u32, x0: u32, y0: u32, bw: u32, bh: u32) -> Mask {
        Mask::from_runs(w, h, (y0..y0 + bh).map(|y| Run::new(y, x0, bw))).unwrap()
    }

    fn brute_iou(a: &Bitmap, b: &Bitmap) -> f64 {
        let (mut inter, mut union) = (0u64, 0u64);
        for (&p, &q) in a.as_slice().iter().zip(b.as_slice()) {
            inter += u64::from(p && q);
            union += u64::from(p || q);
        }
        if union == 0 {
            0.0
        } else {
            inter as f64 / union as f64
        }
    }

    #[test]
    fn area_cases() {
        assert_eq!(Mask::empty(4, 4).area(), 0);
        assert_eq!(block(4, 4, 0, 0, 4, 4).area(), 16);
        let m = Mask::from_runs(4, 4, [Run::new(0, 0, 3), Run::new(1, 1, 1)]).unwrap();
        assert_eq!(m.to_bitmap().count_ones(), 4);
        assert_eq!(m.area(), 4);
    }

    #[test]
    fn iou_cases() {
        let a = block(4, 4, 0, 0, 2, 2);
        let b = block(4, 4, 1, 1, 2, 2);
        assert_eq!(a.iou(&a).unwrap(), 1.0);
        assert_eq!(a.iou(&block(4, 4, 2, 2, 2, 2)).unwrap(), 0.0);
        assert_eq!(brute_iou(&a.to_bitmap(), &b.to_bitmap()), 1.0 / 7.0);
        assert_eq!(a.iou(&b).unwrap(), 1.0 / 7.0);
        assert_eq!(Mask::empty(4, 4).iou(&Mask::empty(4, 4)).unwrap(), 0.0);
        assert!(matches!(
            a.iou(&Mask::empty(5, 4)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn centroid_cases() {
        let p = Mask::from_pixels(8, 8, [(3, 7)]).unwrap();
        assert_eq!(p.centroid().unwrap(), Centroid::new(3.0, 7.0));
        assert_eq!(
            block(4, 4, 0, 0, 2, 2).centroid().unwrap(),
            Centroid::new(0.5, 0.5)
        );
        // (x, y) pixels; hand mean x = 1/4, y = 3/4
        let m = Mask::from_pixels(4, 4, [(0, 0), (0, 1), (0, 2), (1, 0)]).unwrap();
        assert_eq!(m.centroid().unwrap(), Centroid::new(0.25, 0.75));
        assert!(matches!(
            Mask::empty(4, 4).centroid(),
            Err(Error::EmptyMask)
        ));
    }

    #[test]
    fn shift_cases() {
        let m = block(8, 8, 1, 2, 3, 2);
        assert_eq!(m.shift(0, 0), m);
        let p = Mask::from_pixels(8, 8, [(0, 0)]).unwrap();
        assert_eq!(p.shift(2, 3), Mask::from_pixels(8, 8, [(2, 3)]).unwrap());
        let edge = Mask::from_pixels(512, 512, [(511, 0)]).unwrap();
        assert!(edge.shift(1, 0).is_empty());
        assert_eq!(m.shift(-2, 0).area(), 4);
    }

    #[test]
    fn rle_edge_cases() {
        let zero = Bitmap::new(5, 3);
        assert!(Mask::from_bitmap(&zero).runs().is_empty());
        let mut row = Bitmap::new(5, 3);
        for x in 0..5 {
            row.set(x, 1, true);
        }
        assert_eq!(Mask::from_bitmap(&row).runs(), &[Run::new(1, 0, 5)]);
    }

    #[test]
    fn from_runs_canonicalizes() {
        let m = Mask::from_runs(
            10,
            2,
            [Run::new(0, 4, 2), Run::new(0, 0, 2), Run::new(0, 2, 1)],
        )
        .unwrap();
        assert_eq!(m.runs(), &[Run::new(0, 0, 3), Run::new(0, 4, 2)]);
        let m = Mask::from_runs(10, 2, [Run::new(1, 0, 3), Run::new(1, 3, 2)]).unwrap();
        assert_eq!(m.runs(), &[Run::new(1, 0, 5)]);
        assert!(Mask::from_runs(10, 2, [Run::new(2, 0, 1)]).is_err());
        assert!(Mask::from_runs(10, 2, [Run::new(0, 8, 3)]).is_err());
        assert!(
            Mask::from_canonical_runs(10, 2, vec![Run::new(0, 0, 2), Run::new(0, 2, 1)]).is_err()
        );
    }

    #[test]
    fn euclidean_cases() {
        let a = block(200, 200, 10, 10, 3, 3);
        assert_eq!(euclidean_similarity(&a, &a, 50.0).unwrap(), 1.0);
        assert_eq!(
            euclidean_similarity(&a, &a.shift(100, 0), 50.0).unwrap(),
            0.0
        );
        assert_eq!(
            euclidean_similarity(&a, &a.shift(25, 0), 50.0).unwrap(),
            0.5
        );
        assert_eq!(
            euclidean_similarity(&a, &Mask::empty(200, 200), 50.0).unwrap(),
            0.0
        );
    }

    #[test]
    fn polygon_square() {
        let m = Mask::from_polygon(10, 10, &[(1.0, 1.0), (4.0, 1.0), (4.0, 4.0), (1.0, 4.0)]);
        // rows 1..=3, cols 1..=3 under half-open edges
        assert_eq!(m.area(), 9);
        assert_eq!(
            m.bounding_box(),
            Some(BoundingBox {
                x0: 1,
                y0: 1,
                x1: 3,
                y1: 3
            })
        );
        let clipped = Mask::from_polygon(
            10,
            10,
            &[(-5.0, -5.0), (20.0, -5.0), (20.0, 20.0), (-5.0, 20.0)],
        );
        assert_eq!(clipped.area(), 100);
    }

    fn bitmap_strategy(w: u32, h: u32) -> impl Strategy<Value = Bitmap> {
        proptest::collection::vec(any::<bool>(), (w * h) as usize)
            .prop_map(move |data| Bitmap::from_vec(w, h, data).unwrap())
    }

    proptest! {
        #[test]
        fn rle_round_trip(b in bitmap_strategy(16, 16)) {
            prop_assert_eq!(Mask::from_bitmap(&b).to_bitmap(), b);
        }

        #[test]
        fn iou_matches_bitmap_oracle(a in bitmap_strategy(32, 32), b in bitmap_strategy(32, 32)) {
            let (ma, mb) = (Mask::from_bitmap(&a), Mask::from_bitmap(&b));
            let v = ma.iou(&mb).unwrap();
            prop_assert_eq!(v, brute_iou(&a, &b));
            prop_assert_eq!(v, mb.iou(&ma).unwrap());
            prop_assert!((0.0..=1.0).contains(&v));
            if !ma.is_empty() {
                prop_assert_eq!(ma.iou(&ma).unwrap(), 1.0);
            }
        }

        #[test]
        fn shift_moves_centroid(b in bitmap_strategy(12, 12), dx in 0i64..8, dy in 0i64..8) {
            let m = Mask::from_bitmap(&b);
            prop_assume!(!m.is_empty());
            let big = Mask::from_runs(24, 24, m.runs().iter().copied()).unwrap();
            let c = big.centroid().unwrap();
            let s = big.shift(dx, dy).centroid().unwrap();
            prop_assert!((s.x - c.x - dx as f64).abs() < 1e-9);
            prop_assert!((s.y - c.y - dy as f64).abs() < 1e-9);
        }
    }
}

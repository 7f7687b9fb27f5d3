//! Maximum-similarity partial assignment on a gated similarity matrix.
//!
//! Similarities are converted to exact fixed-point integers (`2^-60`
//! resolution) and solved with the shortest-augmenting-path Hungarian method
//! in `i128`. Every row may also stay unassigned through a private zero-cost
//! dummy column, which turns the rectangular partial problem into a plain
//! `rows <= cols` assignment. Among assignments of equal total similarity the
//! one with the smallest sum of row and column indices wins.

/// Dense `rows x cols` similarity matrix with per-entry feasibility.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
    feasible: Vec<bool>,
    pub delta_t: u32,
}

impl SimilarityMatrix {
    pub fn new(rows: usize, cols: usize, delta_t: u32) -> Self {
        SimilarityMatrix {
            rows,
            cols,
            values: vec![0.0; rows * cols],
            feasible: vec![false; rows * cols],
            delta_t,
        }
    }

    /// Builds a matrix with every entry feasible.
    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let n = rows.len();
        let m = rows.first().map_or(0, Vec::len);
        let mut out = SimilarityMatrix::new(n, m, 0);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), m, "ragged similarity matrix");
            for (j, &v) in row.iter().enumerate() {
                out.set(i, j, v, true);
            }
        }
        out
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.rows == 0 || self.cols == 0
    }

    pub fn set(&mut self, row: usize, col: usize, value: f64, feasible: bool) {
        debug_assert!(
            (0.0..=1.0).contains(&value),
            "similarity {value} outside [0, 1]"
        );
        let k = row * self.cols + col;
        self.values[k] = value;
        self.feasible[k] = feasible;
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.cols + col]
    }

    pub fn is_feasible(&self, row: usize, col: usize) -> bool {
        self.feasible[row * self.cols + col]
    }

    /// Marks every entry below `threshold`, and every zero entry, infeasible.
    pub fn gate(&mut self, threshold: f64) {
        for (v, f) in self.values.iter().zip(self.feasible.iter_mut()) {
            if *v < threshold || *v <= 0.0 {
                *f = false;
            }
        }
    }

    /// Sum of the similarities of `pairs`, accumulated in the given order.
    pub fn total(&self, pairs: &[(usize, usize)]) -> f64 {
        pairs.iter().map(|&(i, j)| self.get(i, j)).sum()
    }
}

const FIXED_POINT_BITS: i32 = 60;

fn to_fixed(v: f64) -> i128 {
    (v * f64::powi(2.0, FIXED_POINT_BITS)).round() as i128
}

/// Optimal one-to-one partial assignment over feasible entries, as `(row, col)`
/// pairs sorted by row.
pub fn hungarian(matrix: &SimilarityMatrix) -> Vec<(usize, usize)> {
    let (n, m) = (matrix.rows, matrix.cols);
    if n == 0 || m == 0 {
        return Vec::new();
    }
    assert!(n + m < 1 << 20, "similarity matrix too large");

    // Tie-break weight must exceed the largest possible index sum.
    let tie_scale = ((n + m) * (n + m) + 1) as i128;
    let forbidden: i128 = 1 << 120;
    let width = m + n;
    let cost = |i: usize, j: usize| -> i128 {
        if j >= m {
            return 0;
        }
        if !matrix.is_feasible(i, j) {
            return forbidden;
        }
        -to_fixed(matrix.get(i, j)) * tie_scale + (i + j) as i128
    };

    // Potentials and matching use 1-based indices; column 0 is the virtual root.
    let inf = i128::MAX / 4;
    let mut u = vec![0i128; n + 1];
    let mut v = vec![0i128; width + 1];
    let mut owner = vec![0usize; width + 1];
    let mut way = vec![0usize; width + 1];
    for i in 1..=n {
        owner[0] = i;
        let mut j0 = 0usize;
        let mut min_to = vec![inf; width + 1];
        let mut used = vec![false; width + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = inf;
            let mut j1 = 0usize;
            for j in 1..=width {
                if used[j] {
                    continue;
                }
                let reduced = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if reduced < min_to[j] {
                    min_to[j] = reduced;
                    way[j] = j0;
                }
                if min_to[j] < delta {
                    delta = min_to[j];
                    j1 = j;
                }
            }
            for j in 0..=width {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    min_to[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut pairs: Vec<(usize, usize)> = (1..=m)
        .filter(|&j| owner[j] != 0)
        .map(|j| (owner[j] - 1, j - 1))
        .filter(|&(i, j)| matrix.is_feasible(i, j))
        .collect();
    pairs.sort_unstable();
    pairs
}

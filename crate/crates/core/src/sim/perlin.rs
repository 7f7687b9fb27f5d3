//! Periodic 1-D gradient noise sampled on a closed ring of points.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::seeded;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PerlinParams {
    pub octaves: u32,
    pub persistence: f64,
    pub lacunarity: f64,
    /// Lattice cells around the ring for the first octave.
    pub base_cells: u32,
}

impl Default for PerlinParams {
    fn default() -> Self {
        PerlinParams {
            octaves: 6,
            persistence: 0.5,
            lacunarity: 2.0,
            base_cells: 2,
        }
    }
}

fn fade(t: f64) -> f64 {
    t * t * t * (t * (t * 6.0 - 15.0) + 10.0)
}

/// Samples `n_points` equally spaced angles of a noise function that wraps
/// around `2*pi`, rescaled so the largest magnitude is exactly 1.
///
/// Each octave `k` uses `round(base_cells * lacunarity^k)` lattice cells and
/// amplitude `persistence^k`.
pub fn perlin_1d_periodic(n_points: usize, params: &PerlinParams, seed: u64) -> Vec<f64> {
    assert!(n_points >= 3, "need at least 3 points on the ring");
    let mut out = vec![0.0; n_points];
    let mut amplitude = 1.0;
    for octave in 0..params.octaves.max(1) {
        let cells = (f64::from(params.base_cells) * params.lacunarity.powi(octave as i32))
            .round()
            .max(1.0) as usize;
        let mut rng = seeded(seed, &[u64::from(octave)]);
        let gradients: Vec<f64> = (0..cells).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        for (p, slot) in out.iter_mut().enumerate() {
            let x = p as f64 * cells as f64 / n_points as f64;
            let cell = x.floor() as usize;
            let f = x - cell as f64;
            let g0 = gradients[cell % cells];
            let g1 = gradients[(cell + 1) % cells];
            let s = fade(f);
            *slot += amplitude * ((1.0 - s) * g0 * f + s * g1 * (f - 1.0));
        }
        amplitude *= params.persistence;
    }
    let peak = out.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak > 0.0 {
        out.iter_mut().for_each(|v| *v /= peak);
    }
    out
}

//! Frame rendering: static Gaussian background, per-frame noise, flat or
//! edge-halo object styles, and static line artifacts.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::Mask;
use crate::track::GrayImage;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RenderStyle {
    /// Objects filled with a uniform gray level.
    Flat,
    /// Canny edges of the object mask spread by a wide Gaussian blur.
    PhaseContrast,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RenderParams {
    pub background_bumps: usize,
    pub background_peak: f64,
    pub noise_peak: f64,
    /// Object gray levels are drawn from `(min_brightness, 1]`.
    pub min_brightness: f64,
    pub blur_kernel: usize,
    pub canny_sigma: f64,
    pub canny_low: f64,
    pub canny_high: f64,
    pub artifact_lines: usize,
}

impl Default for RenderParams {
    fn default() -> Self {
        RenderParams {
            background_bumps: 10,
            background_peak: 0.39,
            noise_peak: 0.078,
            min_brightness: 0.39,
            blur_kernel: 51,
            canny_sigma: 1.0,
            canny_low: 0.1,
            canny_high: 0.3,
            artifact_lines: 100,
        }
    }
}

impl RenderParams {
    /// Blur sigma for the configured kernel size.
    pub fn blur_sigma(&self) -> f64 {
        0.3 * ((self.blur_kernel as f64 - 1.0) / 2.0 - 1.0) + 0.8
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bump {
    pub center: (f64, f64),
    pub sigma: (f64, f64),
    pub angle: f64,
    pub amplitude: f64,
}

/// Static background field, row-major, values in `[0, peak]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Background {
    pub width: u32,
    pub height: u32,
    pub bumps: Vec<Bump>,
    pub field: Vec<f64>,
}

impl Background {
    pub fn generate(width: u32, height: u32, params: &RenderParams, rng: &mut impl Rng) -> Self {
        let side = f64::from(width.min(height));
        let bumps: Vec<Bump> = (0..params.background_bumps)
            .map(|_| Bump {
                center: (
                    rng.gen_range(0.0..f64::from(width)),
                    rng.gen_range(0.0..f64::from(height)),
                ),
                sigma: (
                    rng.gen_range(0.05..0.25) * side,
                    rng.gen_range(0.05..0.25) * side,
                ),
                angle: rng.gen_range(0.0..PI),
                amplitude: rng.gen_range(0.2..1.0),
            })
            .collect();
        let mut field = vec![0.0; width as usize * height as usize];
        for b in &bumps {
            let (s, c) = b.angle.sin_cos();
            for y in 0..height {
                for x in 0..width {
                    let dx = f64::from(x) - b.center.0;
                    let dy = f64::from(y) - b.center.1;
                    let u = (dx * c + dy * s) / b.sigma.0;
                    let v = (-dx * s + dy * c) / b.sigma.1;
                    field[(y * width + x) as usize] += b.amplitude * (-0.5 * (u * u + v * v)).exp();
                }
            }
        }
        let max = field.iter().copied().fold(0.0, f64::max);
        if max > 0.0 {
            let k = params.background_peak / max;
            field.iter_mut().for_each(|v| *v *= k);
        }
        Background {
            width,
            height,
            bumps,
            field,
        }
    }
}

/// Straight full-brightness lines between random points on the image border.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArtifactLayer {
    pub pixels: Vec<bool>,
}

fn border_point(width: u32, height: u32, rng: &mut impl Rng) -> (f64, f64) {
    let (w, h) = (f64::from(width - 1), f64::from(height - 1));
    let s = rng.gen_range(0.0..2.0 * (w + h));
    if s < w {
        (s, 0.0)
    } else if s < w + h {
        (w, s - w)
    } else if s < 2.0 * w + h {
        (2.0 * w + h - s, h)
    } else {
        (0.0, 2.0 * (w + h) - s)
    }
}

impl ArtifactLayer {
    pub fn generate(width: u32, height: u32, lines: usize, rng: &mut impl Rng) -> Self {
        let mut pixels = vec![false; width as usize * height as usize];
        for _ in 0..lines {
            let a = border_point(width, height, rng);
            let b = border_point(width, height, rng);
            let steps = (b.0 - a.0).abs().max((b.1 - a.1).abs()).ceil().max(1.0) as usize;
            for i in 0..=steps {
                let t = i as f64 / steps as f64;
                let x = (a.0 + t * (b.0 - a.0)).round() as usize;
                let y = (a.1 + t * (b.1 - a.1)).round() as usize;
                pixels[y * width as usize + x] = true;
            }
        }
        ArtifactLayer { pixels }
    }
}

fn gaussian_kernel(sigma: f64, radius: usize) -> Vec<f64> {
    let k: Vec<f64> = (0..=2 * radius)
        .map(|i| {
            let d = i as f64 - radius as f64;
            (-d * d / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    let sum: f64 = k.iter().sum();
    k.into_iter().map(|v| v / sum).collect()
}

/// Separable convolution with zero padding.
fn convolve(src: &[f64], w: usize, h: usize, kernel: &[f64]) -> Vec<f64> {
    let r = kernel.len() / 2;
    let mut tmp = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (i, k) in kernel.iter().enumerate() {
                let xx = x as isize + i as isize - r as isize;
                if xx >= 0 && (xx as usize) < w {
                    acc += k * src[y * w + xx as usize];
                }
            }
            tmp[y * w + x] = acc;
        }
    }
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (i, k) in kernel.iter().enumerate() {
                let yy = y as isize + i as isize - r as isize;
                if yy >= 0 && (yy as usize) < h {
                    acc += k * tmp[yy as usize * w + x];
                }
            }
            out[y * w + x] = acc;
        }
    }
    out
}

/// Canny edge map of a binary image given as 0/1 values.
pub fn canny(img: &[f64], w: usize, h: usize, sigma: f64, low: f64, high: f64) -> Vec<bool> {
    let radius = (3.0 * sigma).ceil() as usize;
    let smooth = convolve(img, w, h, &gaussian_kernel(sigma, radius));
    let at = |x: isize, y: isize| -> f64 {
        let x = x.clamp(0, w as isize - 1) as usize;
        let y = y.clamp(0, h as isize - 1) as usize;
        smooth[y * w + x]
    };
    let mut mag = vec![0.0; w * h];
    let mut dir = vec![0u8; w * h];
    for y in 0..h as isize {
        for x in 0..w as isize {
            let gx = (at(x + 1, y - 1) + 2.0 * at(x + 1, y) + at(x + 1, y + 1))
                - (at(x - 1, y - 1) + 2.0 * at(x - 1, y) + at(x - 1, y + 1));
            let gy = (at(x - 1, y + 1) + 2.0 * at(x, y + 1) + at(x + 1, y + 1))
                - (at(x - 1, y - 1) + 2.0 * at(x, y - 1) + at(x + 1, y - 1));
            let k = y as usize * w + x as usize;
            mag[k] = gx.hypot(gy);
            let mut angle = gy.atan2(gx).to_degrees();
            if angle < 0.0 {
                angle += 180.0;
            }
            dir[k] = if !(22.5..157.5).contains(&angle) {
                0
            } else if angle < 67.5 {
                1
            } else if angle < 112.5 {
                2
            } else {
                3
            };
        }
    }
    let max = mag.iter().copied().fold(0.0, f64::max);
    if max == 0.0 {
        return vec![false; w * h];
    }
    let m = |x: isize, y: isize| -> f64 {
        if x < 0 || y < 0 || x >= w as isize || y >= h as isize {
            0.0
        } else {
            mag[y as usize * w + x as usize]
        }
    };
    let mut thin = vec![0.0; w * h];
    for y in 0..h as isize {
        for x in 0..w as isize {
            let k = y as usize * w + x as usize;
            let (dx, dy) = [(1, 0), (1, 1), (0, 1), (-1, 1)][dir[k] as usize];
            if mag[k] >= m(x + dx, y + dy) && mag[k] >= m(x - dx, y - dy) {
                thin[k] = mag[k];
            }
        }
    }
    let (lo, hi) = (low * max, high * max);
    let mut edge = vec![false; w * h];
    let mut stack: Vec<usize> = (0..w * h).filter(|&k| thin[k] >= hi).collect();
    for &k in &stack {
        edge[k] = true;
    }
    while let Some(k) = stack.pop() {
        let (x, y) = ((k % w) as isize, (k / w) as isize);
        for dy in -1..=1 {
            for dx in -1..=1 {
                let (nx, ny) = (x + dx, y + dy);
                if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                    continue;
                }
                let n = ny as usize * w + nx as usize;
                if !edge[n] && thin[n] >= lo {
                    edge[n] = true;
                    stack.push(n);
                }
            }
        }
    }
    edge
}

/// Adds the blurred edge halo of one mask, scaled so a straight edge line
/// peaks near `brightness`, into `halo`.
fn add_halo(halo: &mut [f64], mask: &Mask, brightness: f64, params: &RenderParams) {
    let Some(bb) = mask.bounding_box() else {
        return;
    };
    let (width, height) = (mask.width() as i64, mask.height() as i64);
    let radius = params.blur_kernel / 2;
    let pad = radius as i64 + 3;
    let x0 = (i64::from(bb.x0) - pad).max(0);
    let y0 = (i64::from(bb.y0) - pad).max(0);
    let x1 = (i64::from(bb.x1) + pad).min(width - 1);
    let y1 = (i64::from(bb.y1) + pad).min(height - 1);
    let (w, h) = ((x1 - x0 + 1) as usize, (y1 - y0 + 1) as usize);
    let mut crop = vec![0.0; w * h];
    for run in mask.runs() {
        let base = (i64::from(run.row) - y0) as usize * w;
        for x in run.start..run.end() {
            crop[base + (i64::from(x) - x0) as usize] = 1.0;
        }
    }
    let edges = canny(
        &crop,
        w,
        h,
        params.canny_sigma,
        params.canny_low,
        params.canny_high,
    );
    let layer: Vec<f64> = edges
        .iter()
        .map(|&e| if e { brightness } else { 0.0 })
        .collect();
    let sigma = params.blur_sigma();
    let blurred = convolve(&layer, w, h, &gaussian_kernel(sigma, radius));
    let gain = (2.0 * PI).sqrt() * sigma;
    for y in 0..h {
        let row = (y0 as usize + y) * width as usize;
        for x in 0..w {
            halo[row + x0 as usize + x] += gain * blurred[y * w + x];
        }
    }
}

/// Renders one frame. Objects are drawn in order, later ones on top.
pub fn render_frame(
    background: &Background,
    objects: &[(&Mask, f64)],
    style: RenderStyle,
    params: &RenderParams,
    artifacts: Option<&ArtifactLayer>,
    noise_rng: &mut impl Rng,
) -> GrayImage {
    let (w, h) = (background.width, background.height);
    let mut value = background.field.clone();
    match style {
        RenderStyle::Flat => {
            for (mask, brightness) in objects {
                for run in mask.runs() {
                    let base = (run.row * w) as usize;
                    value[base + run.start as usize..base + run.end() as usize].fill(*brightness);
                }
            }
        }
        RenderStyle::PhaseContrast => {
            let mut halo = vec![0.0; value.len()];
            for (mask, brightness) in objects {
                add_halo(&mut halo, mask, *brightness, params);
            }
            value.iter_mut().zip(&halo).for_each(|(v, a)| *v += a);
        }
    }
    for v in value.iter_mut() {
        *v += noise_rng.gen_range(0.0..=params.noise_peak);
    }
    let mut image = GrayImage::new(w, h);
    for (p, v) in image.pixels.iter_mut().zip(&value) {
        *p = (v.clamp(0.0, 1.0) * 255.0).round() as u8;
    }
    if let Some(layer) = artifacts {
        for (p, &on) in image.pixels.iter_mut().zip(&layer.pixels) {
            if on {
                *p = 255;
            }
        }
    }
    image
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Run;
    use crate::sim::seeded;

    #[test]
    fn blur_sigma_for_kernel_51() {
        assert!((RenderParams::default().blur_sigma() - 8.0).abs() < 1e-12);
    }

    #[test]
    fn background_peak_is_bounded() {
        let p = RenderParams::default();
        let bg = Background::generate(128, 96, &p, &mut seeded(1, &[]));
        let max = bg.field.iter().copied().fold(0.0, f64::max);
        assert!((max - 0.39).abs() < 1e-12);
        assert!(bg.field.iter().all(|v| *v >= 0.0));
    }

    #[test]
    fn empty_scene_bound() {
        let p = RenderParams::default();
        let bound = (255.0 * (0.39 + 0.078f64)).round() as u8;
        for seed in 0..5 {
            let bg = Background::generate(128, 128, &p, &mut seeded(seed, &[0]));
            let img = render_frame(
                &bg,
                &[],
                RenderStyle::Flat,
                &p,
                None,
                &mut seeded(seed, &[1]),
            );
            assert!(img.pixels.iter().all(|&v| v <= bound));
            let img = render_frame(
                &bg,
                &[],
                RenderStyle::PhaseContrast,
                &p,
                None,
                &mut seeded(seed, &[1]),
            );
            assert!(img.pixels.iter().all(|&v| v <= bound));
        }
    }

    #[test]
    fn flat_object_pixels_exceed_floor() {
        let p = RenderParams::default();
        let bg = Background::generate(64, 64, &p, &mut seeded(2, &[]));
        let mask = Mask::from_runs(64, 64, (10..20).map(|r| Run::new(r, 10, 15))).unwrap();
        let floor = (255.0 * 0.39f64).round() as u8;
        for b in [0.3901, 0.5, 1.0] {
            let img = render_frame(
                &bg,
                &[(&mask, b)],
                RenderStyle::Flat,
                &p,
                None,
                &mut seeded(3, &[]),
            );
            for run in mask.runs() {
                for x in run.start..run.end() {
                    assert!(img.get(x, run.row) >= floor);
                }
            }
        }
    }

    #[test]
    fn canny_traces_square_outline() {
        let (w, h) = (40, 40);
        let mut img = vec![0.0; w * h];
        for y in 10..30 {
            for x in 10..30 {
                img[y * w + x] = 1.0;
            }
        }
        let e = canny(&img, w, h, 1.0, 0.1, 0.3);
        // edges along the border, none deep inside or far outside
        assert!(e[20 * w + 9] || e[20 * w + 10]);
        assert!(!e[20 * w + 20]);
        assert!(!e[2 * w + 2]);
    }

    #[test]
    fn halo_peaks_near_edges() {
        let p = RenderParams::default();
        let bg = Background {
            width: 128,
            height: 128,
            bumps: vec![],
            field: vec![0.0; 128 * 128],
        };
        let mask = Mask::from_runs(128, 128, (40..90).map(|r| Run::new(r, 40, 50))).unwrap();
        let mut quiet = ZeroRng;
        let img = render_frame(
            &bg,
            &[(&mask, 0.8)],
            RenderStyle::PhaseContrast,
            &p,
            None,
            &mut quiet,
        );
        assert!(img.get(40, 65) > img.get(5, 65));
        assert!(img.get(40, 65) > 100);
    }

    #[test]
    fn artifact_lines_touch_borders() {
        let layer = ArtifactLayer::generate(64, 64, 100, &mut seeded(4, &[]));
        let on = layer.pixels.iter().filter(|&&v| v).count();
        assert!(on > 64 * 10);
    }

    /// Rng that always yields zero bits, so noise vanishes.
    struct ZeroRng;

    impl rand::RngCore for ZeroRng {
        fn next_u32(&mut self) -> u32 {
            0
        }
        fn next_u64(&mut self) -> u64 {
            0
        }
        fn fill_bytes(&mut self, dest: &mut [u8]) {
            dest.fill(0);
        }
        fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), rand::Error> {
            dest.fill(0);
            Ok(())
        }
    }
}

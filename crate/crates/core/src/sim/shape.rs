//! Simulated objects: arrow triangles and Perlin-contoured amoeboids.

use std::f64::consts::PI;
use std::ops::{Add, AddAssign, Mul, Sub};

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::perlin::{perlin_1d_periodic, PerlinParams};
use crate::geometry::Mask;

/// Vertices on an amoeboid contour.
pub const CONTOUR_POINTS: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    pub fn from_angle(angle: f64) -> Self {
        Vec2::new(angle.cos(), angle.sin())
    }

    pub fn dot(self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn angle(self) -> f64 {
        self.y.atan2(self.x)
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl AddAssign for Vec2 {
    fn add_assign(&mut self, o: Vec2) {
        self.x += o.x;
        self.y += o.y;
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, k: f64) -> Vec2 {
        Vec2::new(self.x * k, self.y * k)
    }
}

/// Per-kind arrow parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ArrowParams {
    /// Smallest nominal equivalent diameter in pixels.
    pub min_diameter: f64,
    /// Largest over smallest nominal diameter.
    pub size_ratio: f64,
    /// Mean speed as a fraction of the mean nominal diameter.
    pub speed_fraction: f64,
    pub max_rotation_deg: f64,
    pub expand_p: f64,
    pub expand_min: f64,
    pub expand_max: f64,
}

impl Default for ArrowParams {
    fn default() -> Self {
        ArrowParams {
            min_diameter: 12.0,
            size_ratio: 6.0,
            speed_fraction: 0.4,
            max_rotation_deg: 10.0,
            expand_p: 0.33,
            expand_min: 1.016,
            expand_max: 1.10,
        }
    }
}

/// Per-kind amoeboid parameters. Fractions are relative to the nominal radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AmoeboidParams {
    pub min_radius: f64,
    pub max_radius: f64,
    /// Amplitude of the initial contour noise.
    pub initial_noise: f64,
    /// Largest per-frame radius change.
    pub epsilon: f64,
    /// Width of the Gaussian weight around the nominal radius.
    pub sigma: f64,
    pub clamp_min: f64,
    pub clamp_max: f64,
    pub speed_fraction: f64,
    /// Acceleration toward the image center in damped modes, px/frame^2.
    pub center_accel: f64,
    /// Speed retained by each body after a damped collision.
    pub damping: f64,
    pub perlin: PerlinParams,
}

impl Default for AmoeboidParams {
    fn default() -> Self {
        AmoeboidParams {
            min_radius: 12.0,
            max_radius: 24.0,
            initial_noise: 0.3,
            epsilon: 0.08,
            sigma: 0.3,
            clamp_min: 0.4,
            clamp_max: 1.6,
            speed_fraction: 0.2,
            center_accel: 0.02,
            damping: 0.9,
            perlin: PerlinParams::default(),
        }
    }
}

impl AmoeboidParams {
    /// Range of contour areas a freshly spawned amoeboid can have.
    pub fn area_band(&self) -> (f64, f64) {
        let lo = (1.0 - self.initial_noise) * self.min_radius;
        let hi = (1.0 + self.initial_noise) * self.max_radius;
        let n = CONTOUR_POINTS as f64;
        // the inscribed polygon of the smallest circle bounds area from below
        (0.5 * n * lo * lo * (2.0 * PI / n).sin(), PI * hi * hi)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum Shape {
    /// Isosceles triangle with height 1.5x its base, pointing along the
    /// orientation. `scale` multiplies the nominal size for the current frame.
    Arrow { diameter: f64, scale: f64 },
    /// Polar radii at `CONTOUR_POINTS` equally spaced angles.
    Amoeboid {
        nominal_radius: f64,
        radii: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimObject {
    pub id: u64,
    pub center: Vec2,
    pub velocity: Vec2,
    pub orientation: f64,
    pub brightness: f64,
    pub shape: Shape,
}

impl SimObject {
    pub fn polygon(&self) -> Vec<(f64, f64)> {
        match &self.shape {
            Shape::Arrow { diameter, scale } => {
                // area 0.75 b^2 equals that of a disc of the nominal diameter
                let base = diameter * scale * (PI / 3.0).sqrt();
                let height = 1.5 * base;
                let (s, c) = self.orientation.sin_cos();
                [
                    (2.0 * height / 3.0, 0.0),
                    (-height / 3.0, base / 2.0),
                    (-height / 3.0, -base / 2.0),
                ]
                .iter()
                .map(|&(u, v)| (self.center.x + u * c - v * s, self.center.y + u * s + v * c))
                .collect()
            }
            Shape::Amoeboid { radii, .. } => radii
                .iter()
                .enumerate()
                .map(|(k, r)| {
                    let theta = 2.0 * PI * k as f64 / radii.len() as f64;
                    (
                        self.center.x + r * theta.cos(),
                        self.center.y + r * theta.sin(),
                    )
                })
                .collect(),
        }
    }

    pub fn rasterize(&self, width: u32, height: u32) -> Mask {
        Mask::from_polygon(width, height, &self.polygon())
    }

    /// Largest distance from the center to the contour.
    pub fn extent(&self) -> f64 {
        match &self.shape {
            Shape::Arrow { diameter, scale } => diameter * scale * (PI / 3.0).sqrt(),
            Shape::Amoeboid { radii, .. } => radii.iter().copied().fold(0.0, f64::max),
        }
    }

    /// Equivalent diameter of the unperturbed shape.
    pub fn nominal_diameter(&self) -> f64 {
        match &self.shape {
            Shape::Arrow { diameter, .. } => *diameter,
            Shape::Amoeboid { nominal_radius, .. } => 2.0 * nominal_radius,
        }
    }

    /// Polygon area by the shoelace formula.
    pub fn area(&self) -> f64 {
        let p = self.polygon();
        let twice: f64 = (0..p.len())
            .map(|i| {
                let (a, b) = (p[i], p[(i + 1) % p.len()]);
                a.0 * b.1 - b.0 * a.1
            })
            .sum();
        0.5 * twice.abs()
    }
}

/// Initial contour `r_nom * (1 + initial_noise * perlin)` around the origin.
pub fn spawn_amoeboid(id: u64, params: &AmoeboidParams, rng: &mut impl Rng) -> SimObject {
    let nominal_radius = if params.max_radius > params.min_radius {
        rng.gen_range(params.min_radius..=params.max_radius)
    } else {
        params.min_radius
    };
    let noise = perlin_1d_periodic(CONTOUR_POINTS, &params.perlin, rng.gen());
    let radii = noise
        .iter()
        .map(|p| nominal_radius * (1.0 + params.initial_noise * p))
        .collect();
    SimObject {
        id,
        center: Vec2::ZERO,
        velocity: Vec2::ZERO,
        orientation: 0.0,
        brightness: 0.0,
        shape: Shape::Amoeboid {
            nominal_radius,
            radii,
        },
    }
}

/// Gaussian modulation weight of a radius change, 1 at the nominal radius.
pub fn shape_weight(radius: f64, nominal_radius: f64, sigma: f64) -> f64 {
    let d = radius - nominal_radius;
    (-d * d / (2.0 * sigma * sigma)).exp()
}

/// One frame of contour evolution driven by fresh periodic noise.
pub fn step_amoeboid_shape(obj: &mut SimObject, params: &AmoeboidParams, noise_seed: u64) {
    let Shape::Amoeboid {
        nominal_radius,
        radii,
    } = &mut obj.shape
    else {
        return;
    };
    let r_nom = *nominal_radius;
    let eps = params.epsilon * r_nom;
    if eps == 0.0 {
        return;
    }
    let sigma = params.sigma * r_nom;
    let noise = perlin_1d_periodic(radii.len(), &params.perlin, noise_seed);
    for (r, p) in radii.iter_mut().zip(noise) {
        let next = *r + eps * p * shape_weight(*r, r_nom, sigma);
        *r = next.clamp(params.clamp_min * r_nom, params.clamp_max * r_nom);
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrowStep {
    pub rotation: f64,
    pub expanded: bool,
}

/// Rotates, possibly expands, and translates an arrow. The velocity keeps its
/// speed and follows the new orientation.
pub fn step_arrow(obj: &mut SimObject, params: &ArrowParams, rng: &mut impl Rng) -> ArrowStep {
    let max_rot = params.max_rotation_deg.to_radians();
    let rotation = rng.gen_range(-max_rot..=max_rot);
    let expanded = rng.gen_bool(params.expand_p);
    let factor = if expanded {
        rng.gen_range(params.expand_min..=params.expand_max)
    } else {
        1.0
    };
    if let Shape::Arrow { scale, .. } = &mut obj.shape {
        *scale = factor;
    }
    obj.orientation += rotation;
    obj.velocity = Vec2::from_angle(obj.orientation) * obj.velocity.norm();
    obj.center += obj.velocity;
    ArrowStep { rotation, expanded }
}

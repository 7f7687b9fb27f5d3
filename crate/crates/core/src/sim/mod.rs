//! Seed-deterministic synthetic recordings with exact ground-truth tracks.
//!
//! Five kinds are available: fast rotating and pulsing triangular arrows that
//! may cross each other, and four amoeboid variants with Perlin-noise contours
//! that bounce off each other. The amoeboid variants differ in rendering
//! (flat or phase-contrast halo), collisions (rigid or damped with a pull
//! toward the image center) and a static overlay of bright lines.

pub mod dynamics;
pub mod perlin;
pub mod render;
pub mod shape;

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Mask;
use crate::track::{GlobalTrack, Recording, TrackEntry};
use dynamics::{
    center_pull, clamp_inside, overlapping_pairs, reflect_walls, resolve_collisions, CollisionMode,
};
use render::{render_frame, ArtifactLayer, Background, RenderParams, RenderStyle};
use shape::{
    spawn_amoeboid, step_amoeboid_shape, step_arrow, AmoeboidParams, ArrowParams, Shape, SimObject,
    Vec2,
};

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a sub-seed from `seed` and a path of labels.
pub fn derive_seed(seed: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix(seed), |acc, &p| splitmix(acc ^ splitmix(p)))
}

/// Independent generator for the stream named by `path`.
pub fn seeded(seed: u64, path: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, path))
}

// stream labels
const SPAWN: u64 = 1;
const STEP: u64 = 2;
const SHAPE: u64 = 3;
const BACKGROUND: u64 = 4;
const NOISE: u64 = 5;
const ARTIFACTS: u64 = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimKind {
    Arrows,
    Amoeboids,
    AmoeboidsPc,
    AmoeboidsPcc,
    AmoeboidsPcca,
}

impl SimKind {
    pub const ALL: [SimKind; 5] = [
        SimKind::Arrows,
        SimKind::Amoeboids,
        SimKind::AmoeboidsPc,
        SimKind::AmoeboidsPcc,
        SimKind::AmoeboidsPcca,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SimKind::Arrows => "arrows",
            SimKind::Amoeboids => "amoeboids",
            SimKind::AmoeboidsPc => "amoeboids_pc",
            SimKind::AmoeboidsPcc => "amoeboids_pcc",
            SimKind::AmoeboidsPcca => "amoeboids_pcca",
        }
    }

    pub fn style(self) -> RenderStyle {
        match self {
            SimKind::Arrows | SimKind::Amoeboids => RenderStyle::Flat,
            _ => RenderStyle::PhaseContrast,
        }
    }

    pub fn collisions(self, params: &AmoeboidParams) -> CollisionMode {
        match self {
            SimKind::Arrows => CollisionMode::None,
            SimKind::Amoeboids | SimKind::AmoeboidsPc => CollisionMode::Rigid,
            SimKind::AmoeboidsPcc | SimKind::AmoeboidsPcca => CollisionMode::Damped {
                retain: params.damping,
            },
        }
    }

    pub fn has_artifacts(self) -> bool {
        self == SimKind::AmoeboidsPcca
    }
}

impl fmt::Display for SimKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SimKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.to_ascii_lowercase().replace('-', "_");
        SimKind::ALL
            .into_iter()
            .find(|k| k.name() == norm)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown simulation kind `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    pub kind: SimKind,
    pub width: u32,
    pub height: u32,
    pub frames: u32,
    pub n_objects: usize,
    pub seed: u64,
    /// Skip image synthesis and produce ground truth only.
    pub skip_render: bool,
    pub arrows: ArrowParams,
    pub amoeboids: AmoeboidParams,
    pub render: RenderParams,
    pub spawn_attempts: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            kind: SimKind::Arrows,
            width: 512,
            height: 512,
            frames: 100,
            n_objects: 10,
            seed: 0,
            skip_render: false,
            arrows: ArrowParams::default(),
            amoeboids: AmoeboidParams::default(),
            render: RenderParams::default(),
            spawn_attempts: 1000,
        }
    }
}

impl SimConfig {
    pub fn new(kind: SimKind, n_objects: usize, seed: u64) -> Self {
        SimConfig {
            kind,
            n_objects,
            seed,
            ..SimConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.width < 8 || self.height < 8 {
            return bad("width and height must be at least 8");
        }
        if self.frames == 0 {
            return bad("frames must be positive");
        }
        let a = &self.arrows;
        if !(a.min_diameter > 0.0 && a.size_ratio >= 1.0 && a.speed_fraction >= 0.0) {
            return bad("arrow size and speed parameters out of range");
        }
        if !(0.0..=1.0).contains(&a.expand_p)
            || !(1.0 <= a.expand_min && a.expand_min <= a.expand_max)
        {
            return bad("arrow expansion parameters out of range");
        }
        let m = &self.amoeboids;
        if !(m.min_radius > 0.0 && m.min_radius <= m.max_radius) {
            return bad("amoeboid radius band out of range");
        }
        if !(0.0..1.0).contains(&m.initial_noise) || m.epsilon < 0.0 || m.sigma <= 0.0 {
            return bad("amoeboid shape parameters out of range");
        }
        if !(0.0 < m.clamp_min && m.clamp_min <= 1.0 && m.clamp_max >= 1.0) {
            return bad("amoeboid radius clamp out of range");
        }
        if !(0.0..=1.0).contains(&m.damping) || m.center_accel < 0.0 || m.speed_fraction < 0.0 {
            return bad("amoeboid dynamics parameters out of range");
        }
        let r = &self.render;
        if !(0.0..1.0).contains(&r.min_brightness)
            || r.blur_kernel % 2 == 0
            || r.canny_low > r.canny_high
        {
            return bad("render parameters out of range");
        }
        Ok(())
    }
}

/// Kinematic snapshot of one object on one frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectState {
    pub id: u64,
    pub center: Vec2,
    pub velocity: Vec2,
    pub orientation: f64,
    /// Equivalent diameter of the unperturbed shape.
    pub nominal_diameter: f64,
    /// Current size multiplier (arrows; 1 for amoeboids).
    pub scale: f64,
}

impl ObjectState {
    fn of(obj: &SimObject) -> Self {
        let scale = match obj.shape {
            Shape::Arrow { scale, .. } => scale,
            Shape::Amoeboid { .. } => 1.0,
        };
        ObjectState {
            id: obj.id,
            center: obj.center,
            velocity: obj.velocity,
            orientation: obj.orientation,
            nominal_diameter: obj.nominal_diameter(),
            scale,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimEvents {
    pub arrow_steps: u64,
    pub expansions: u64,
    pub collisions: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Simulation {
    pub config: SimConfig,
    pub recording: Recording,
    /// One gapless track per object, ids from 1.
    pub ground_truth: Vec<GlobalTrack>,
    /// `states[t][i]` is object `i` on frame `t`.
    pub states: Vec<Vec<ObjectState>>,
    pub events: SimEvents,
}

fn place(
    obj: &mut SimObject,
    placed: &[SimObject],
    config: &SimConfig,
    avoid_overlap: bool,
    rng: &mut impl Rng,
    index: usize,
) -> Result<()> {
    let (w, h) = (
        f64::from(config.width) - 1.0,
        f64::from(config.height) - 1.0,
    );
    let e = obj.extent();
    if 2.0 * e > w.min(h) {
        return Err(Error::SpawnFailed {
            object: index,
            attempts: 0,
        });
    }
    for _ in 0..config.spawn_attempts.max(1) {
        let c = Vec2::new(rng.gen_range(e..=w - e), rng.gen_range(e..=h - e));
        let free = !avoid_overlap
            || placed
                .iter()
                .all(|o| (o.center - c).norm() > o.extent() + e + 2.0);
        if free {
            obj.center = c;
            return Ok(());
        }
    }
    Err(Error::SpawnFailed {
        object: index,
        attempts: config.spawn_attempts,
    })
}

fn brightness(min: f64, rng: &mut impl Rng) -> f64 {
    1.0 - rng.gen::<f64>() * (1.0 - min)
}

/// Half-normal speeds rescaled so their mean is `fraction * mean_diameter`.
fn assign_speeds(objects: &mut [SimObject], fraction: f64, rng: &mut impl Rng) {
    if objects.is_empty() {
        return;
    }
    let normal = Normal::<f64>::new(0.0, 1.0).expect("unit normal");
    let raw: Vec<f64> = objects.iter().map(|_| normal.sample(rng).abs()).collect();
    let raw_mean = raw.iter().sum::<f64>() / raw.len() as f64;
    let mean_diameter =
        objects.iter().map(SimObject::nominal_diameter).sum::<f64>() / objects.len() as f64;
    let k = if raw_mean > 0.0 {
        fraction * mean_diameter / raw_mean
    } else {
        0.0
    };
    for (obj, r) in objects.iter_mut().zip(raw) {
        if matches!(obj.shape, Shape::Amoeboid { .. }) {
            obj.orientation = rng.gen_range(0.0..std::f64::consts::TAU);
        }
        obj.velocity = Vec2::from_angle(obj.orientation) * (r * k);
    }
}

fn spawn_all(config: &SimConfig) -> Result<Vec<SimObject>> {
    let mut rng = seeded(config.seed, &[SPAWN]);
    let mut objects: Vec<SimObject> = Vec::with_capacity(config.n_objects);
    for i in 0..config.n_objects {
        let id = i as u64 + 1;
        let mut obj = match config.kind {
            SimKind::Arrows => {
                let a = &config.arrows;
                let hi = a.min_diameter * a.size_ratio;
                let diameter = if hi > a.min_diameter {
                    rng.gen_range(a.min_diameter..=hi)
                } else {
                    a.min_diameter
                };
                SimObject {
                    id,
                    center: Vec2::ZERO,
                    velocity: Vec2::ZERO,
                    orientation: rng.gen_range(0.0..std::f64::consts::TAU),
                    brightness: 0.0,
                    shape: Shape::Arrow {
                        diameter,
                        scale: 1.0,
                    },
                }
            }
            _ => spawn_amoeboid(id, &config.amoeboids, &mut rng),
        };
        obj.brightness = brightness(config.render.min_brightness, &mut rng);
        let avoid = config.kind != SimKind::Arrows;
        place(&mut obj, &objects, config, avoid, &mut rng, i)?;
        objects.push(obj);
    }
    let fraction = match config.kind {
        SimKind::Arrows => config.arrows.speed_fraction,
        _ => config.amoeboids.speed_fraction,
    };
    assign_speeds(&mut objects, fraction, &mut rng);
    Ok(objects)
}

/// Pushes overlapping objects apart along their center axis, one pixel per
/// pair per round, until no rasterized masks overlap.
fn separate(objects: &mut [SimObject], masks: &mut [Mask], width: u32, height: u32) {
    for _ in 0..500 {
        let pairs = overlapping_pairs(masks);
        if pairs.is_empty() {
            return;
        }
        for (i, j) in pairs {
            let d = objects[j].center - objects[i].center;
            let n = if d.norm() > 1e-9 {
                d * (1.0 / d.norm())
            } else {
                Vec2::new(1.0, 0.0)
            };
            objects[i].center = objects[i].center - n * 0.5;
            objects[j].center += n * 0.5;
            for k in [i, j] {
                clamp_inside(&mut objects[k], width, height);
                masks[k] = objects[k].rasterize(width, height);
            }
        }
    }
}

fn step_arrows(objects: &mut [SimObject], config: &SimConfig, t: u32, events: &mut SimEvents) {
    let mut rng = seeded(config.seed, &[STEP, u64::from(t)]);
    for obj in objects.iter_mut() {
        let step = step_arrow(obj, &config.arrows, &mut rng);
        events.arrow_steps += 1;
        events.expansions += u64::from(step.expanded);
        reflect_walls(obj, config.width, config.height);
        if obj.velocity.norm() > 0.0 {
            obj.orientation = obj.velocity.angle();
        }
    }
}

fn step_amoeboids(
    objects: &mut [SimObject],
    config: &SimConfig,
    t: u32,
    events: &mut SimEvents,
) -> Vec<Mask> {
    let (w, h) = (config.width, config.height);
    let params = &config.amoeboids;
    let mode = config.kind.collisions(params);
    for obj in objects.iter_mut() {
        step_amoeboid_shape(
            obj,
            params,
            derive_seed(config.seed, &[SHAPE, obj.id, u64::from(t)]),
        );
        if matches!(mode, CollisionMode::Damped { .. }) {
            obj.velocity += center_pull(obj, w, h, params.center_accel);
        }
        obj.center += obj.velocity;
        reflect_walls(obj, w, h);
    }
    let mut masks: Vec<Mask> = objects.iter().map(|o| o.rasterize(w, h)).collect();
    events.collisions += resolve_collisions(objects, &masks, mode).len() as u64;
    separate(objects, &mut masks, w, h);
    masks
}

pub fn simulate(config: &SimConfig) -> Result<Simulation> {
    config.validate()?;
    let (w, h) = (config.width, config.height);
    let mut objects = spawn_all(config)?;
    let mut events = SimEvents::default();
    let mut masks_per_frame: Vec<Vec<Mask>> = Vec::with_capacity(config.frames as usize);
    let mut states = Vec::with_capacity(config.frames as usize);
    for t in 0..config.frames {
        let masks = if t == 0 {
            let mut m: Vec<Mask> = objects.iter().map(|o| o.rasterize(w, h)).collect();
            if config.kind != SimKind::Arrows {
                separate(&mut objects, &mut m, w, h);
            }
            m
        } else if config.kind == SimKind::Arrows {
            step_arrows(&mut objects, config, t, &mut events);
            objects.iter().map(|o| o.rasterize(w, h)).collect()
        } else {
            step_amoeboids(&mut objects, config, t, &mut events)
        };
        states.push(objects.iter().map(ObjectState::of).collect::<Vec<_>>());
        masks_per_frame.push(masks);
    }

    let mut ground_truth: Vec<GlobalTrack> =
        objects.iter().map(|o| GlobalTrack::new(o.id)).collect();
    for (t, masks) in masks_per_frame.iter().enumerate() {
        for (track, mask) in ground_truth.iter_mut().zip(masks) {
            track
                .entries
                .insert(t as u32, TrackEntry::detected(mask.clone(), None));
        }
    }

    let mut recording = Recording::new(w, h, config.frames);
    if !config.skip_render {
        let background = Background::generate(
            w,
            h,
            &config.render,
            &mut seeded(config.seed, &[BACKGROUND]),
        );
        let artifacts = config.kind.has_artifacts().then(|| {
            ArtifactLayer::generate(
                w,
                h,
                config.render.artifact_lines,
                &mut seeded(config.seed, &[ARTIFACTS]),
            )
        });
        let brightness: Vec<f64> = objects.iter().map(|o| o.brightness).collect();
        let frames = masks_per_frame
            .par_iter()
            .enumerate()
            .map(|(t, masks)| {
                let drawn: Vec<(&Mask, f64)> =
                    masks.iter().zip(brightness.iter().copied()).collect();
                render_frame(
                    &background,
                    &drawn,
                    config.kind.style(),
                    &config.render,
                    artifacts.as_ref(),
                    &mut seeded(config.seed, &[NOISE, t as u64]),
                )
            })
            .collect();
        recording.frames = Some(frames);
    }

    Ok(Simulation {
        config: config.clone(),
        recording,
        ground_truth,
        states,
        events,
    })
}

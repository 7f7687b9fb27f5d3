//! Two-body collisions, wall reflection and the centering force.

use serde::{Deserialize, Serialize};

use super::shape::{SimObject, Vec2};
use crate::geometry::Mask;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CollisionMode {
    /// Objects pass through each other.
    None,
    Rigid,
    /// Rigid response, then both speeds multiplied by `retain`.
    Damped {
        retain: f64,
    },
}

/// Elastic response along the axis from `c1` to `c2`, with masses `m1`, `m2`.
///
/// Returns `None` when the bodies are not approaching along that axis.
pub fn collide(
    (c1, v1, m1): (Vec2, Vec2, f64),
    (c2, v2, m2): (Vec2, Vec2, f64),
    mode: CollisionMode,
) -> Option<(Vec2, Vec2)> {
    let axis = c2 - c1;
    let len = axis.norm();
    if len == 0.0 {
        return None;
    }
    let n = axis * (1.0 / len);
    let (u1, u2) = (v1.dot(n), v2.dot(n));
    if u1 - u2 <= 0.0 {
        return None;
    }
    let total = m1 + m2;
    let w1 = ((m1 - m2) * u1 + 2.0 * m2 * u2) / total;
    let w2 = ((m2 - m1) * u2 + 2.0 * m1 * u1) / total;
    let mut out1 = v1 + n * (w1 - u1);
    let mut out2 = v2 + n * (w2 - u2);
    if let CollisionMode::Damped { retain } = mode {
        out1 = out1 * retain;
        out2 = out2 * retain;
    }
    Some((out1, out2))
}

/// Overlapping object pairs `(i, j)` with `i < j`.
pub fn overlapping_pairs(masks: &[Mask]) -> Vec<(usize, usize)> {
    let boxes: Vec<_> = masks.iter().map(Mask::bounding_box).collect();
    let mut pairs = Vec::new();
    for i in 0..masks.len() {
        for j in i + 1..masks.len() {
            let (Some(a), Some(b)) = (boxes[i], boxes[j]) else {
                continue;
            };
            if a.x1 < b.x0 || b.x1 < a.x0 || a.y1 < b.y0 || b.y1 < a.y0 {
                continue;
            }
            if masks[i].intersection_area(&masks[j]).unwrap_or(0) > 0 {
                pairs.push((i, j));
            }
        }
    }
    pairs
}

/// Applies the collision response to every overlapping, approaching pair and
/// returns the pairs that collided. Masses are proportional to mask area.
pub fn resolve_collisions(
    objects: &mut [SimObject],
    masks: &[Mask],
    mode: CollisionMode,
) -> Vec<(usize, usize)> {
    if mode == CollisionMode::None {
        return Vec::new();
    }
    let mut hits = Vec::new();
    for (i, j) in overlapping_pairs(masks) {
        let a = (
            objects[i].center,
            objects[i].velocity,
            masks[i].area() as f64,
        );
        let b = (
            objects[j].center,
            objects[j].velocity,
            masks[j].area() as f64,
        );
        if let Some((vi, vj)) = collide(a, b, mode) {
            objects[i].velocity = vi;
            objects[j].velocity = vj;
            hits.push((i, j));
        }
    }
    hits
}

/// Reflects an object off the image borders so its contour stays inside.
pub fn reflect_walls(obj: &mut SimObject, width: u32, height: u32) {
    let e = obj.extent();
    let reflect = |c: &mut f64, v: &mut f64, hi: f64| {
        let lo = e;
        let hi = hi - e;
        if lo > hi {
            *c = 0.5 * (lo + hi);
            return;
        }
        if *c < lo {
            *c = (2.0 * lo - *c).min(hi);
            *v = v.abs();
        } else if *c > hi {
            *c = (2.0 * hi - *c).max(lo);
            *v = -v.abs();
        }
    };
    reflect(
        &mut obj.center.x,
        &mut obj.velocity.x,
        f64::from(width) - 1.0,
    );
    reflect(
        &mut obj.center.y,
        &mut obj.velocity.y,
        f64::from(height) - 1.0,
    );
}

/// Keeps the center where the whole contour stays inside the image.
pub fn clamp_inside(obj: &mut SimObject, width: u32, height: u32) {
    let e = obj.extent();
    let fit = |c: f64, hi: f64| {
        if e > hi - e {
            0.5 * hi
        } else {
            c.clamp(e, hi - e)
        }
    };
    obj.center.x = fit(obj.center.x, f64::from(width) - 1.0);
    obj.center.y = fit(obj.center.y, f64::from(height) - 1.0);
}

/// Velocity change toward the image center.
pub fn center_pull(obj: &SimObject, width: u32, height: u32, accel: f64) -> Vec2 {
    let center = Vec2::new(
        0.5 * (f64::from(width) - 1.0),
        0.5 * (f64::from(height) - 1.0),
    );
    let d = center - obj.center;
    let len = d.norm();
    if len < 1e-9 {
        Vec2::ZERO
    } else {
        d * (accel / len)
    }
}

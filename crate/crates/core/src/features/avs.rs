use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{ShapeKind, Solid, Vec3};
use crate::scene::{ObjectInstance, Scene, WorkspaceSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preposition {
    InFrontOf,
    Behind,
    Above,
    Below,
    LeftOf,
    RightOf,
}

impl Preposition {
    pub const ALL: [Preposition; 6] = [
        Preposition::InFrontOf,
        Preposition::Behind,
        Preposition::Above,
        Preposition::Below,
        Preposition::LeftOf,
        Preposition::RightOf,
    ];

    /// Canonical direction as seen by a robot standing at the open face.
    pub fn axis(self, ws: &WorkspaceSpec) -> Vec3 {
        let front = ws.open_face.outward();
        let left = Vec3::z().cross(&(-front));
        match self {
            Preposition::InFrontOf => front,
            Preposition::Behind => -front,
            Preposition::Above => Vec3::z(),
            Preposition::Below => -Vec3::z(),
            Preposition::LeftOf => left,
            Preposition::RightOf => -left,
        }
    }
}

fn closest_point(s: &Solid, p: &Vec3) -> Vec3 {
    let local = s.axes.transpose() * (p - s.center);
    let q = match s.kind {
        ShapeKind::Box => local.zip_map(&s.half, |x, h| x.clamp(-h, h)),
        ShapeKind::Sphere => {
            let n = local.norm();
            if n <= s.half.x {
                local
            } else {
                local * (s.half.x / n)
            }
        }
        ShapeKind::Cylinder => {
            let r = (local.x * local.x + local.y * local.y).sqrt();
            let k = if r > s.half.x { s.half.x / r } else { 1.0 };
            Vec3::new(local.x * k, local.y * k, local.z.clamp(-s.half.z, s.half.z))
        }
    };
    s.center + s.axes * q
}

/// Surface samples closed under reflection of each body axis.
fn symmetric_samples(o: &ObjectInstance) -> Vec<Vec3> {
    let rot = o.pose.rotation();
    let t = o.pose.translation();
    let mut out = Vec::with_capacity(o.shape.surface_samples().len() * 8);
    for p in o.shape.surface_samples() {
        for sx in [1.0, -1.0] {
            for sy in [1.0, -1.0] {
                for sz in [1.0, -1.0] {
                    out.push(rot * Vec3::new(sx * p.x, sy * p.y, sz * p.z) + t);
                }
            }
        }
    }
    out
}

/// Attention-weighted vector sum from the landmark toward the trajector centroid.
fn avs_direction(trajector: &ObjectInstance, landmark: &ObjectInstance) -> Option<Vec3> {
    let t = trajector.centroid();
    if (t - landmark.centroid()).norm() <= 1e-9 {
        return None;
    }
    let solid = landmark.solid();
    let focus = closest_point(&solid, &t);
    let scale = landmark.shape.bounding_radius();
    let mut v = Vec3::zeros();
    for s in symmetric_samples(landmark) {
        let d = t - s;
        let n = d.norm();
        if n <= 1e-12 {
            continue;
        }
        v += d * ((-(s - focus).norm() / scale).exp() / n);
    }
    let n = v.norm();
    (n > 1e-12).then(|| v / n)
}

/// Acceptability of "trajector <preposition> landmark" in [0, 1].
pub fn avs_score(scene: &Scene, trajector: u32, landmark: u32, prep: Preposition) -> Result<f64> {
    Ok(avs_scores(scene, trajector, landmark)?[Preposition::ALL.iter().position(|p| *p == prep).unwrap()])
}

/// Scores for all prepositions, in `Preposition::ALL` order.
pub fn avs_scores(scene: &Scene, trajector: u32, landmark: u32) -> Result<[f64; 6]> {
    if trajector == landmark {
        return Err(Error::InvalidConfig(format!("trajector and landmark are both {trajector}")));
    }
    let t = scene.object(trajector).ok_or(Error::UnknownObject(trajector))?;
    let l = scene.object(landmark).ok_or(Error::UnknownObject(landmark))?;
    let Some(v) = avs_direction(t, l) else {
        return Ok([0.5; 6]);
    };
    Ok(Preposition::ALL.map(|p| ((1.0 + v.dot(&p.axis(&scene.workspace))) / 2.0).clamp(0.0, 1.0)))
}

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::dynamics::World;
use crate::error::{Error, Result};
use crate::geometry::{Pose6D, Vec3};
use crate::scene::{class_shape, ObjectInstance, Scene, WorkspaceSpec, EPS_PEN};

pub const MAX_CLASSES: usize = 6;
pub const MAX_GENERATION_ATTEMPTS: usize = 1000;
pub const MAX_RESOLVE_ITERATIONS: usize = 500;
const MAX_VARIANT_ATTEMPTS: usize = 100;

/// Uniform draw of a cluster centroid inside the workspace box.
pub fn cluster_centroid<R: Rng + ?Sized>(ws: &WorkspaceSpec, rng: &mut R) -> Vec3 {
    let lo = ws.lo();
    let hi = ws.hi();
    Vec3::new(
        rng.random_range(lo.x..hi.x),
        rng.random_range(lo.y..hi.y),
        rng.random_range(lo.z.max(ws.floor_z)..hi.z),
    )
}

fn right_angle<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    use std::f64::consts::{FRAC_PI_2, PI};
    [0.0, FRAC_PI_2, -FRAC_PI_2, PI][rng.random_range(0..4)]
}

/// Separates overlapping objects, keeping them inside the workspace box.
pub fn resolve_interpenetration(scene: &Scene) -> Result<Scene> {
    let mut world = World::new(scene);
    world.resolve_interpenetration(EPS_PEN, MAX_RESOLVE_ITERATIONS)?;
    Ok(world.to_scene(scene))
}

/// Resolve + settle; `None` when an object ends up outside the workspace.
fn consolidate(scene: &Scene) -> Result<Option<Scene>> {
    let mut world = World::new(scene);
    world.resolve_interpenetration(EPS_PEN, MAX_RESOLVE_ITERATIONS)?;
    world.settle()?;
    if !world.fallen.is_empty() {
        return Ok(None);
    }
    let out = world.to_scene(scene);
    Ok(out.validate().is_ok().then_some(out))
}

/// Random clustered scene with one object per class label.
pub fn generate_scene(classes: &[String], ws: &WorkspaceSpec, seed: u64) -> Result<Scene> {
    if classes.is_empty() {
        return Err(Error::EmptyScene);
    }
    if classes.len() > MAX_CLASSES {
        return Err(Error::InvalidConfig(format!(
            "at most {MAX_CLASSES} objects per generated scene, got {}",
            classes.len()
        )));
    }
    ws.validate()?;
    let mut sorted: Vec<String> = classes.to_vec();
    sorted.sort();
    let shapes = sorted.iter().map(|c| class_shape(c)).collect::<Result<Vec<_>>>()?;
    let radius = 0.75 * shapes.iter().map(|s| s.max_extent()).sum::<f64>();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    for attempt in 0..MAX_GENERATION_ATTEMPTS {
        let c = cluster_centroid(ws, &mut rng);
        let objects: Vec<ObjectInstance> = sorted
            .iter()
            .zip(&shapes)
            .enumerate()
            .map(|(i, (label, shape))| {
                // uniform point in the cluster ball
                let dir = loop {
                    let v = Vec3::new(
                        rng.random_range(-1.0..1.0),
                        rng.random_range(-1.0..1.0),
                        rng.random_range(-1.0..1.0),
                    );
                    if v.norm_squared() <= 1.0 {
                        break v;
                    }
                };
                let p = c + dir * radius;
                let yaw = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
                let roll = right_angle(&mut rng);
                let pitch = right_angle(&mut rng);
                ObjectInstance {
                    id: i as u32 + 1,
                    class_label: label.clone(),
                    shape: shape.clone(),
                    pose: Pose6D::new(p.x, p.y, p.z, roll, pitch, yaw),
                }
            })
            .collect();
        let mut world_scene = Scene::new(ws.clone(), objects, seed);
        {
            let mut w = World::new(&world_scene);
            for i in 0..w.bodies.len() {
                w.clamp_to_box(i);
            }
            world_scene = w.to_scene(&world_scene);
        }
        match consolidate(&world_scene) {
            Ok(Some(scene)) => {
                log::debug!("scene seed {seed}: accepted after {} attempts", attempt + 1);
                return Ok(scene);
            }
            Ok(None) | Err(Error::ResolutionFailed { .. }) | Err(Error::SettleFailed(_)) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::GenerationFailed(MAX_GENERATION_ATTEMPTS))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VariantNoise {
    pub count: usize,
    pub sigma_pos: f64,
    pub sigma_ang: f64,
}

impl VariantNoise {
    pub fn for_workspace(ws: &WorkspaceSpec) -> Self {
        Self {
            count: 5,
            sigma_pos: 0.01 * ws.diagonal(),
            sigma_ang: 0.05,
        }
    }
}

/// Noisy collision-free copies of `scene`: Gaussian noise on position and yaw.
pub fn make_variants(scene: &Scene, noise: &VariantNoise, seed: u64) -> Result<Vec<Scene>> {
    if noise.count == 0 {
        return Err(Error::InvalidConfig("variant count must be at least 1".into()));
    }
    if !(noise.sigma_pos >= 0.0 && noise.sigma_ang >= 0.0) {
        return Err(Error::InvalidConfig("noise scales must be non-negative".into()));
    }
    if noise.sigma_pos == 0.0 && noise.sigma_ang == 0.0 {
        return Ok(vec![scene.clone(); noise.count]);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pos = Normal::new(0.0, noise.sigma_pos).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let ang = Normal::new(0.0, noise.sigma_ang).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let mut out = Vec::with_capacity(noise.count);
    for _ in 0..noise.count {
        let mut last_err = None;
        let mut done = None;
        for _ in 0..MAX_VARIANT_ATTEMPTS {
            let mut v = scene.clone();
            for o in &mut v.objects {
                let [x, y, z, r, p, yaw] = o.pose.to_array();
                o.pose = Pose6D::new(
                    x + pos.sample(&mut rng),
                    y + pos.sample(&mut rng),
                    z + pos.sample(&mut rng),
                    r,
                    p,
                    yaw + ang.sample(&mut rng),
                );
            }
            let mut w = World::new(&v);
            for i in 0..w.bodies.len() {
                w.clamp_to_box(i);
            }
            let v = w.to_scene(&v);
            match consolidate(&v) {
                Ok(Some(s)) => {
                    done = Some(s);
                    break;
                }
                Ok(None) => {}
                Err(e @ Error::ResolutionFailed { .. }) => last_err = Some(e),
                Err(e) => return Err(e),
            }
        }
        match done {
            Some(s) => out.push(s),
            None => return Err(last_err.unwrap_or(Error::GenerationFailed(MAX_VARIANT_ATTEMPTS))),
        }
    }
    Ok(out)
}

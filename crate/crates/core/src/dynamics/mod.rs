//! Deterministic quasi-static stand-in for a physics engine: settling,
//! extraction sweeps with pushes, contacts and synthetic visible clouds.

mod world;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{max_weighted_scv, separation_within, Solid, Trajectory, Vec3, WeightVector};
use crate::scene::Scene;

pub(crate) use world::World;

/// Surface distance at which two objects count as touching.
pub const CONTACT_TOL: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Full edge lengths of the axis-aligned gripper box.
    pub gripper_dims: [f64; 3],
    /// Reach radius as a multiple of the workspace diagonal.
    pub reach_scale: f64,
    /// Offset of the reach center from the gripper origin.
    pub reach_offset: [f64; 3],
    /// Approach step as a fraction of the workspace depth.
    pub step_fraction: f64,
    /// Active displacement, relative to its bounding radius, that counts as moved.
    pub active_moved_fraction: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            gripper_dims: [0.08, 0.08, 0.08],
            reach_scale: 1.2,
            reach_offset: [0.0; 3],
            step_fraction: 0.02,
            active_moved_fraction: 0.5,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.gripper_dims.iter().all(|d| d.is_finite() && *d > 0.0)
            && self.reach_scale.is_finite()
            && self.reach_scale > 0.0
            && self.reach_offset.iter().all(|d| d.is_finite())
            && self.step_fraction.is_finite()
            && self.step_fraction > 0.0
            && self.active_moved_fraction.is_finite()
            && self.active_moved_fraction > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("invalid simulator settings: {self:?}")))
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimFlags {
    pub active_moved: bool,
    pub out_of_workspace: BTreeSet<u32>,
    pub plan_failure: bool,
}

impl SimFlags {
    pub fn any(&self) -> bool {
        self.active_moved || self.plan_failure || !self.out_of_workspace.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContactRecord {
    pub pair: (u32, u32),
    pub point: [f64; 3],
    pub normal: [f64; 3],
    pub force: f64,
}

#[derive(Debug, Clone)]
pub struct SimulationOutcome {
    pub active: u32,
    pub trajectories: BTreeMap<u32, Trajectory>,
    /// Contacts of the initial state.
    pub contacts: Vec<ContactRecord>,
    pub flags: SimFlags,
    pub final_scene: Scene,
}

impl SimulationOutcome {
    /// Node cost: maximum weighted swept convex volume over the passive objects.
    pub fn node_cost(&self, scene: &Scene, w: &WeightVector) -> Result<f64> {
        let entries: Vec<_> = scene
            .objects
            .iter()
            .filter(|o| o.id != self.active)
            .filter_map(|o| self.trajectories.get(&o.id).map(|t| (&o.shape, t)))
            .collect();
        max_weighted_scv(entries, w)
    }

    /// True when no passive object moved at all.
    pub fn passives_static(&self) -> bool {
        self.trajectories
            .iter()
            .filter(|(id, _)| **id != self.active)
            .all(|(_, t)| t.len() == 1)
    }
}

/// Lets unsupported objects fall and rollers roll until nothing moves.
/// Objects that leave the workspace over a drop edge are removed.
pub fn settle_scene(scene: &Scene) -> Result<Scene> {
    let mut world = World::new(scene);
    world.settle()?;
    Ok(world.to_scene(scene))
}

/// Settles and reports the ids that fell out of the workspace.
pub fn settle_scene_report(scene: &Scene) -> Result<(Scene, Vec<u32>)> {
    let mut world = World::new(scene);
    world.settle()?;
    Ok((world.to_scene(scene), world.fallen.clone()))
}

fn lateral_of(dir: &Vec3) -> Vec3 {
    let h = Vec3::new(-dir.y, dir.x, 0.0);
    if h.norm() > 1e-12 {
        h.normalize()
    } else {
        Vec3::y()
    }
}

fn waypoints(from: Vec3, to: Vec3, step: f64) -> Vec<Vec3> {
    let len = (to - from).norm();
    let n = (len / step).ceil().max(1.0) as usize;
    (1..=n).map(|k| from + (to - from) * (k as f64 / n as f64)).collect()
}

/// Simulates approaching, grasping and pulling `active` out through the open face.
pub fn simulate_extraction(scene: &Scene, active: u32, cfg: &SimConfig) -> Result<SimulationOutcome> {
    cfg.validate()?;
    let mut world = World::new(scene);
    let ai = world.index_of(active).ok_or(Error::UnknownObject(active))?;
    let contacts = detect_contacts(scene);
    let mut flags = SimFlags::default();

    let origin = scene.gripper_origin;
    let grasp0 = world.bodies[ai].center();
    let reach_center = origin + Vec3::from(cfg.reach_offset);
    let reach = cfg.reach_scale * scene.workspace.diagonal();
    let half = Vec3::from(cfg.gripper_dims) / 2.0;
    let step = cfg.step_fraction * scene.workspace.depth();

    let finish = |mut world: World, flags: SimFlags| -> SimulationOutcome {
        world.bodies[ai].removed = true;
        world.gripper = None;
        let trajectories = world.bodies.iter().map(|b| (b.id, b.traj.clone())).collect();
        SimulationOutcome {
            active,
            trajectories,
            contacts,
            flags,
            final_scene: world.to_scene(scene),
        }
    };

    if (grasp0 - reach_center).norm() > reach {
        flags.plan_failure = true;
        return Ok(finish(world, flags));
    }

    let start_active = grasp0;
    let moved_limit = cfg.active_moved_fraction * world.bodies[ai].shape.bounding_radius();
    let approach_dir = (grasp0 - origin).try_normalize(1e-12).unwrap_or(-scene.workspace.open_face.outward());
    let lateral = lateral_of(&approach_dir);

    // approach
    for p in waypoints(origin, grasp0, step) {
        world.gripper = Some(Solid::aligned_box(p, half));
        let before: Vec<Vec3> = world.bodies.iter().map(|b| b.center()).collect();
        let ok = push_and_ignore_active(&mut world, ai, &lateral);
        if !ok {
            flags.plan_failure = true;
            return Ok(finish(world, flags));
        }
        let changed = world.bodies.iter().zip(&before).any(|(b, c)| b.center() != *c);
        if changed {
            world.settle()?;
        }
        world.record_all();
        if (world.bodies[ai].center() - start_active).norm() > moved_limit {
            flags.active_moved = true;
            flags.out_of_workspace.extend(world.fallen.iter().copied());
            return Ok(finish(world, flags));
        }
    }

    // grasp and extract along the reversed line
    let grasp = world.bodies[ai].center();
    let gripper_offset = world.gripper.map(|g| g.center).unwrap_or(grasp) - grasp;
    world.bodies[ai].kinematic = true;
    let exit_dir = (origin - grasp).try_normalize(1e-12).unwrap_or(scene.workspace.open_face.outward());
    world.set_carry(Some(exit_dir));
    let mut last = grasp;
    for p in waypoints(grasp, origin, step) {
        let d = p - last;
        last = p;
        world.shift_body(ai, &d);
        world.gripper = Some(Solid::aligned_box(p + gripper_offset, half));
        if !world.resolve_pushes(&lateral) {
            flags.plan_failure = true;
            break;
        }
        world.settle()?;
        world.record_all();
    }
    world.bodies[ai].removed = true;
    world.gripper = None;
    world.set_carry(None);
    world.settle()?;
    world.record_all();
    flags.out_of_workspace.extend(world.fallen.iter().copied());
    Ok(finish(world, flags))
}

/// Pushes during approach: the gripper passes through the active object.
fn push_and_ignore_active(world: &mut World, ai: usize, lateral: &Vec3) -> bool {
    let was = world.bodies[ai].removed;
    world.bodies[ai].removed = true;
    let gripper_ok = world.resolve_pushes(lateral);
    world.bodies[ai].removed = was;
    // pushed passives may now overlap the active
    gripper_ok && {
        let g = world.gripper.take();
        let ok = world.resolve_pushes(lateral);
        world.gripper = g;
        ok
    }
}

/// One record per touching object pair, with the supported weight share as force.
pub fn detect_contacts(scene: &Scene) -> Vec<ContactRecord> {
    let objs = &scene.objects;
    let solids: Vec<Solid> = objs.iter().map(|o| o.solid()).collect();
    let mut touching: Vec<(usize, usize, Vec3)> = Vec::new();
    for i in 0..objs.len() {
        for j in i + 1..objs.len() {
            let Some(sep) = separation_within(&solids[i], &solids[j], CONTACT_TOL) else { continue };
            if sep.distance() > CONTACT_TOL {
                continue;
            }
            // orient from lower to upper
            let (lo, hi, n) = if solids[i].center.z <= solids[j].center.z {
                (i, j, sep.normal)
            } else {
                (j, i, -sep.normal)
            };
            touching.push((lo, hi, n.normalize()));
        }
    }

    // loads propagate top-down, split equally among supporters below
    let mut order: Vec<usize> = (0..objs.len()).collect();
    order.sort_by(|&a, &b| solids[b].center.z.total_cmp(&solids[a].center.z).then(a.cmp(&b)));
    let mut load: Vec<f64> = objs.iter().map(|o| o.shape.volume()).collect();
    let mut share = vec![0.0; objs.len()];
    for &u in &order {
        let supporters: Vec<usize> = touching
            .iter()
            .filter(|(_, hi, n)| *hi == u && n.z > 0.3)
            .map(|(lo, _, _)| *lo)
            .collect();
        if supporters.is_empty() {
            continue;
        }
        let s = load[u] / supporters.len() as f64;
        share[u] = s;
        for l in supporters {
            load[l] += s;
        }
    }

    let mut out = Vec::with_capacity(touching.len());
    for (lo, hi, n) in touching {
        let mut patch = Vec3::zeros();
        let mut count = 0usize;
        for (a, b) in [(lo, hi), (hi, lo)] {
            for p in objs[a].world_samples() {
                if solids[b].signed_distance(&p) <= 2e-3 {
                    patch += p;
                    count += 1;
                }
            }
        }
        let point = if count > 0 {
            patch / count as f64
        } else {
            (solids[lo].support_point(&n) + solids[hi].support_point(&-n)) / 2.0
        };
        let force = if n.z > 0.3 { share[hi] } else { 0.0 };
        let (a, b) = (objs[lo].id, objs[hi].id);
        out.push(ContactRecord {
            pair: (a.min(b), a.max(b)),
            point: point.into(),
            normal: n.into(),
            force,
        });
    }
    out.sort_by_key(|x| x.pair);
    out
}

/// Surface samples of `target` visible from the camera position.
pub fn compute_visible_cloud(scene: &Scene, target: u32) -> Result<Vec<Vec3>> {
    let t = scene.object(target).ok_or(Error::UnknownObject(target))?;
    let cam = scene.camera_pose.translation();
    let own = t.solid();
    let others: Vec<Solid> = scene.objects.iter().filter(|o| o.id != target).map(|o| o.solid()).collect();
    let mut visible = Vec::new();
    for p in t.world_samples() {
        let dir = p - cam;
        let len = dir.norm();
        if len <= 1e-12 {
            visible.push(p);
            continue;
        }
        let tol = 1e-7 / len;
        if let Some((t0, _)) = own.ray_interval(&cam, &dir) {
            if t0 < 1.0 - tol {
                continue;
            }
        }
        let blocked = others.iter().any(|o| {
            o.ray_interval(&cam, &dir)
                .is_some_and(|(t0, t1)| t0 < 1.0 - tol && t1 > tol)
        });
        if !blocked {
            visible.push(p);
        }
    }
    Ok(visible)
}

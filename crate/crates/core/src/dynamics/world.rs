//! Quasi-static rigid world: translation-only motion, gravity settling,
//! rolling, lateral pushes and drop-edge handling.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::{
    overlap_along, penetrating, separation, separation_bound, separation_within, Pose6D, ShapeKind, Solid, Trajectory,
    Vec3,
};
use crate::scene::{ObjectInstance, Scene, WorkspaceSpec};

/// Vertical tolerance for support detection.
pub(crate) const SUPPORT_TOL: f64 = 1e-3;
/// Coverage fraction below which an object loses its footing.
pub(crate) const MIN_COVERAGE: f64 = 0.3;
pub(crate) const MAX_SETTLE_PASSES: usize = 100;
/// Penetration treated as contact rather than overlap.
const PEN_TOL: f64 = 1e-7;
const REST_GAP: f64 = 1e-6;
const PUSH_MARGIN: f64 = 1e-6;
const MAX_BODY_ITERS: usize = 40;
const MAX_CHAIN_ITERS: usize = 60;

#[derive(Debug, Clone)]
pub(crate) struct Body {
    pub id: u32,
    pub class_label: String,
    pub shape: crate::geometry::ShapeModel,
    pub pose: Pose6D,
    pub solid: Solid,
    /// Surface samples rotated into the world frame, relative to the centroid.
    offsets: Arc<Vec<Vec3>>,
    pub traj: Trajectory,
    pub out: bool,
    pub removed: bool,
    /// Moves with the gripper instead of under gravity.
    pub kinematic: bool,
    roller: Roller,
    momentum: Option<Vec3>,
    rolled: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Roller {
    No,
    Sphere,
    /// Lying cylinder; rolls perpendicular to its axis.
    Cylinder(Vec3),
}

impl Body {
    fn new(o: &ObjectInstance) -> Self {
        let rot = o.pose.rotation();
        let offsets: Vec<Vec3> = o.shape.surface_samples().iter().map(|p| rot * p).collect();
        let solid = o.solid();
        let roller = match o.shape.kind() {
            ShapeKind::Sphere => Roller::Sphere,
            ShapeKind::Cylinder => {
                let a = solid.axis(2);
                if a.z.abs() < 0.1 {
                    Roller::Cylinder(a)
                } else {
                    Roller::No
                }
            }
            ShapeKind::Box => Roller::No,
        };
        Self {
            id: o.id,
            class_label: o.class_label.clone(),
            shape: o.shape.clone(),
            pose: o.pose,
            solid,
            offsets: Arc::new(offsets),
            traj: Trajectory::new(o.pose),
            out: false,
            removed: false,
            kinematic: false,
            roller,
            momentum: None,
            rolled: 0.0,
        }
    }

    pub fn live(&self) -> bool {
        !self.out && !self.removed
    }

    pub fn center(&self) -> Vec3 {
        self.solid.center
    }

    fn shift(&mut self, d: &Vec3) {
        self.pose = self.pose.translated(d);
        self.solid = self.solid.translated(d);
    }

    pub fn world_samples(&self) -> impl Iterator<Item = Vec3> + '_ {
        let c = self.solid.center;
        self.offsets.iter().map(move |p| p + c)
    }

    fn roll_radius(&self) -> f64 {
        self.solid.half.x
    }

    pub fn instance(&self) -> ObjectInstance {
        ObjectInstance {
            id: self.id,
            class_label: self.class_label.clone(),
            shape: self.shape.clone(),
            pose: self.pose,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Support {
    Floor,
    Body(usize),
    Gripper,
}

#[derive(Debug, Clone)]
pub(crate) struct Coverage {
    pub fraction: f64,
    pub supported: usize,
    /// Centroid of the supported footprint samples.
    pub patch: Vec3,
    pub supporters: Vec<Support>,
}

#[derive(Debug, Clone)]
pub(crate) struct World {
    pub ws: WorkspaceSpec,
    pub bodies: Vec<Body>,
    pub gripper: Option<Solid>,
    /// Workspace width; rolling travel is capped at half of it.
    roll_cap: f64,
    /// Horizontal velocity direction of the carried body, if any.
    carry_dir: Option<Vec3>,
    /// Ids that crossed a drop edge, in order.
    pub fallen: Vec<u32>,
}

fn horizontal(v: &Vec3) -> Vec3 {
    Vec3::new(v.x, v.y, 0.0)
}

impl World {
    pub fn new(scene: &Scene) -> Self {
        Self {
            ws: scene.workspace.clone(),
            bodies: scene.objects.iter().map(Body::new).collect(),
            gripper: None,
            roll_cap: 0.5 * scene.workspace.width(),
            carry_dir: None,
            fallen: Vec::new(),
        }
    }

    pub fn index_of(&self, id: u32) -> Option<usize> {
        self.bodies.iter().position(|b| b.id == id)
    }

    pub fn record_all(&mut self) {
        for b in &mut self.bodies {
            let p = b.pose;
            b.traj.record(p);
        }
    }

    /// Remaining objects as a scene, keeping the source scene's metadata.
    pub fn to_scene(&self, template: &Scene) -> Scene {
        Scene {
            workspace: template.workspace.clone(),
            objects: self.bodies.iter().filter(|b| b.live()).map(Body::instance).collect(),
            camera_pose: template.camera_pose,
            gripper_origin: template.gripper_origin,
            rng_seed: template.rng_seed,
        }
    }

    pub fn set_carry(&mut self, dir: Option<Vec3>) {
        self.carry_dir = dir.map(|d| horizontal(&d)).filter(|d| d.norm() > 1e-12).map(|d| d.normalize());
    }

    /// Solids other than body `i` that take part in collisions.
    fn obstacles(&self, i: usize) -> impl Iterator<Item = (Support, &Solid)> + '_ {
        self.bodies
            .iter()
            .enumerate()
            .filter(move |(j, b)| *j != i && b.live())
            .map(|(j, b)| (Support::Body(j), &b.solid))
            .chain(self.gripper.iter().map(|g| (Support::Gripper, g)))
    }

    fn wall_violation(&self, s: &Solid) -> f64 {
        let (lo, hi) = s.aabb();
        let mut worst = 0.0f64;
        for face in crate::scene::Face::ALL {
            if self.ws.is_drop_edge(face) {
                continue;
            }
            let ax = face.axis();
            let c = self.ws.face_coord(face);
            let excess = if face.sign() > 0.0 { hi[ax] - c } else { c - lo[ax] };
            worst = worst.max(excess);
        }
        worst
    }

    /// Moves body `i` back inside the non-drop walls.
    fn clamp_to_walls(&mut self, i: usize) {
        let (lo, hi) = self.bodies[i].solid.aabb();
        let mut d = Vec3::zeros();
        for face in crate::scene::Face::ALL {
            if self.ws.is_drop_edge(face) {
                continue;
            }
            let ax = face.axis();
            let c = self.ws.face_coord(face);
            if face.sign() > 0.0 && hi[ax] > c {
                d[ax] = c - hi[ax];
            } else if face.sign() < 0.0 && lo[ax] < c {
                d[ax] = c - lo[ax];
            }
        }
        if d != Vec3::zeros() {
            self.bodies[i].shift(&d);
        }
    }

    fn penetrates_any(&self, i: usize, s: &Solid) -> bool {
        self.obstacles(i)
            .any(|(_, o)| penetrating(s, o, PEN_TOL))
    }

    pub fn coverage(&self, i: usize) -> Coverage {
        let b = &self.bodies[i];
        let base = b.solid.base_z();
        let height = b.solid.aabb().1.z - base;
        let band = (2e-3f64).max(0.02 * height);
        let (lo, hi) = b.solid.aabb();
        let limit_extra = SUPPORT_TOL + 1e-4;
        let candidates: Vec<(Support, &Solid)> = self
            .obstacles(i)
            .filter(|(_, o)| {
                let (olo, ohi) = o.aabb();
                olo.x <= hi.x && ohi.x >= lo.x && olo.y <= hi.y && ohi.y >= lo.y && ohi.z >= base - 2.0 * SUPPORT_TOL
                    && olo.z <= base + band
            })
            .collect();
        let floor_near = base - self.ws.floor_z <= SUPPORT_TOL;
        let mut footprint = 0usize;
        let mut supported = 0usize;
        let mut patch = Vec3::zeros();
        let mut supporters: Vec<Support> = Vec::new();
        let down = -Vec3::z();
        for p in b.world_samples() {
            if p.z - base > band {
                continue;
            }
            footprint += 1;
            // nudged inward so samples on shared edges still register
            let inward = horizontal(&(b.center() - p)) * 1e-4;
            let origin = p + inward + Vec3::new(0.0, 0.0, 1e-4);
            let limit = (p.z - base) + limit_extra;
            let mut hit = None;
            if floor_near && self.ws.footprint_contains(&p) {
                hit = Some(Support::Floor);
            }
            for (tag, o) in &candidates {
                if let Some((t0, t1)) = o.ray_interval(&origin, &down) {
                    if t1 >= 0.0 && t0 <= limit {
                        hit = Some(*tag);
                        if !supporters.contains(tag) {
                            supporters.push(*tag);
                        }
                    }
                }
            }
            if let Some(tag) = hit {
                supported += 1;
                patch += p;
                if !supporters.contains(&tag) {
                    supporters.push(tag);
                }
            }
        }
        Coverage {
            fraction: if footprint == 0 { 0.0 } else { supported as f64 / footprint as f64 },
            supported,
            patch: if supported > 0 { patch / supported as f64 } else { b.center() },
            supporters,
        }
    }

    /// Free vertical fall distance of body `i`, leaving a small resting gap.
    fn drop_distance(&self, i: usize) -> f64 {
        let b = &self.bodies[i];
        let (lo, hi) = b.solid.aabb();
        let floor_gap = if self.ws.footprint_contains(&b.center()) {
            b.solid.base_z() - self.ws.floor_z
        } else {
            f64::INFINITY
        };
        let blockers: Vec<&Solid> = self
            .obstacles(i)
            .map(|(_, o)| o)
            .filter(|o| {
                let (olo, ohi) = o.aabb();
                olo.x <= hi.x + 1e-9 && ohi.x >= lo.x - 1e-9 && olo.y <= hi.y + 1e-9 && ohi.y >= lo.y - 1e-9
                    && olo.z < lo.z
            })
            .collect();
        if !floor_gap.is_finite() && blockers.is_empty() {
            return 0.0;
        }
        let mut t = 0.0;
        for _ in 0..64 {
            let moved = b.solid.translated(&Vec3::new(0.0, 0.0, -t));
            let mut g = floor_gap - t;
            for o in &blockers {
                let (olo, ohi) = o.aabb();
                let (mlo, mhi) = moved.aabb();
                // lateral gap bounds the distance from below
                let lateral = (olo.x - mhi.x).max(mlo.x - ohi.x).max(olo.y - mhi.y).max(mlo.y - ohi.y);
                if lateral > g {
                    continue;
                }
                let rough = -separation_bound(&moved, o);
                g = g.min(if rough > SUPPORT_TOL { rough } else { separation(&moved, o).distance() });
            }
            if !g.is_finite() {
                return 0.0;
            }
            let step = g - REST_GAP / 2.0;
            if g <= REST_GAP || step < 1e-8 {
                break;
            }
            t += step;
        }
        t.max(0.0)
    }

    /// Rolling direction for a roller at rest, if any: its momentum, or the
    /// downhill direction of the contacts below it.
    fn roll_direction(&self, i: usize) -> Option<Vec3> {
        let b = &self.bodies[i];
        if b.roller == Roller::No || b.rolled >= self.roll_cap {
            return None;
        }
        let project = |d: Vec3| -> Option<Vec3> {
            let mut d = horizontal(&d);
            if let Roller::Cylinder(axis) = b.roller {
                let a = horizontal(&axis);
                if a.norm() > 1e-12 {
                    let a = a.normalize();
                    d -= a * a.dot(&d);
                }
            }
            (d.norm() > 1e-9).then(|| d.normalize())
        };
        if let Some(m) = b.momentum {
            return project(m);
        }
        let mut push = Vec3::zeros();
        let mut slanted = false;
        for (j, other) in self.bodies.iter().enumerate() {
            if j == i || !other.live() {
                continue;
            }
            let Some(sep) = separation_within(&other.solid, &b.solid, SUPPORT_TOL) else { continue };
            if sep.distance() > SUPPORT_TOL || sep.normal.z <= 0.05 {
                continue;
            }
            let h = horizontal(&sep.normal);
            slanted |= h.norm() > 0.05;
            push += h;
        }
        if !slanted || push.norm() < 0.05 {
            return None;
        }
        project(push)
    }

    /// Rolls body `i` one step; false when blocked.
    fn roll_step(&mut self, i: usize, dir: &Vec3) -> bool {
        let b = &self.bodies[i];
        let step = (0.25 * b.roll_radius()).min(self.roll_cap - b.rolled);
        if step <= 1e-9 {
            return false;
        }
        let trial = b.solid.translated(&(dir * step));
        if self.penetrates_any(i, &trial) || self.wall_violation(&trial) > PEN_TOL {
            return false;
        }
        let b = &mut self.bodies[i];
        b.shift(&(dir * step));
        b.rolled += step;
        if b.momentum.is_none() {
            b.momentum = Some(*dir);
        }
        true
    }

    /// Slides body `i` off a small support patch; false when blocked.
    fn tip_step(&mut self, i: usize, cov: &Coverage) -> bool {
        let b = &self.bodies[i];
        let mut dir = horizontal(&(b.center() - cov.patch));
        if dir.norm() < 1e-9 {
            if let Some(Support::Body(j)) = cov.supporters.first() {
                dir = horizontal(&(b.center() - self.bodies[*j].center()));
            }
        }
        if dir.norm() < 1e-9 {
            return false;
        }
        let dir = dir.normalize();
        let (lo, hi) = b.solid.aabb();
        let step = 0.1 * (hi.x - lo.x).max(hi.y - lo.y);
        let trial = b.solid.translated(&(dir * step));
        if self.penetrates_any(i, &trial) || self.wall_violation(&trial) > PEN_TOL {
            return false;
        }
        self.bodies[i].shift(&(dir * step));
        true
    }

    fn fall_out(&mut self, i: usize) {
        let floor = self.ws.floor_z;
        let b = &mut self.bodies[i];
        let dz = b.solid.base_z() - floor;
        if dz > 0.0 {
            b.shift(&Vec3::new(0.0, 0.0, -dz));
        }
        b.out = true;
        b.momentum = None;
        let p = b.pose;
        b.traj.record(p);
        self.fallen.push(b.id);
    }

    fn record(&mut self, i: usize) {
        let p = self.bodies[i].pose;
        self.bodies[i].traj.record(p);
    }

    /// One rolling step followed by re-seating; false when blocked.
    fn roll(&mut self, i: usize, dir: &Vec3) -> bool {
        if !self.roll_step(i, dir) {
            self.bodies[i].momentum = None;
            return false;
        }
        let d = self.drop_distance(i);
        if d > 0.0 {
            self.bodies[i].shift(&Vec3::new(0.0, 0.0, -d));
        }
        self.record(i);
        true
    }

    /// Brings body `i` to rest; returns whether it moved.
    fn settle_body(&mut self, i: usize) -> bool {
        let mut moved = false;
        let mut roll_blocked = false;
        for _ in 0..MAX_BODY_ITERS {
            let b = &self.bodies[i];
            if !b.live() || b.kinematic {
                break;
            }
            if self.ws.crossed_drop_edge(&b.center()).is_some() {
                self.fall_out(i);
                return true;
            }
            let roller = b.roller != Roller::No;
            let cov = self.coverage(i);
            if roller && self.carry_dir.is_some() && self.bodies[i].momentum.is_none() {
                let on_carrier = cov
                    .supporters
                    .iter()
                    .any(|s| matches!(s, Support::Body(j) if self.bodies[*j].kinematic));
                if on_carrier {
                    self.bodies[i].momentum = self.carry_dir;
                }
            }
            let footing = cov.fraction >= MIN_COVERAGE || (roller && cov.supported > 0);
            if !footing && cov.supported == 0 {
                let d = self.drop_distance(i);
                if d > 1e-9 {
                    self.bodies[i].shift(&Vec3::new(0.0, 0.0, -d));
                    self.record(i);
                    moved = true;
                    continue;
                }
            }
            if roller {
                if roll_blocked {
                    break;
                }
                if let Some(dir) = self.roll_direction(i) {
                    if self.roll(i, &dir) {
                        moved = true;
                    } else {
                        roll_blocked = true;
                    }
                    continue;
                }
                break;
            }
            if footing || !self.tip_step(i, &cov) {
                break;
            }
            self.record(i);
            moved = true;
        }
        let b = &mut self.bodies[i];
        if b.rolled >= self.roll_cap {
            b.momentum = None;
        }
        moved
    }

    /// Settles every dynamic body until a pass moves nothing.
    pub fn settle(&mut self) -> Result<()> {
        for _ in 0..MAX_SETTLE_PASSES {
            let mut order: Vec<usize> = (0..self.bodies.len())
                .filter(|&i| self.bodies[i].live() && !self.bodies[i].kinematic)
                .collect();
            order.sort_by(|&a, &b| {
                self.bodies[a]
                    .solid
                    .base_z()
                    .total_cmp(&self.bodies[b].solid.base_z())
                    .then(self.bodies[a].id.cmp(&self.bodies[b].id))
            });
            let mut any = false;
            for i in order {
                any |= self.settle_body(i);
            }
            if !any {
                return Ok(());
            }
        }
        Err(Error::SettleFailed(MAX_SETTLE_PASSES))
    }

    /// Pushes dynamic bodies out of kinematic solids and separates chained
    /// overlaps. `lateral` is the horizontal push direction for kinematic contacts.
    pub fn resolve_pushes(&mut self, lateral: &Vec3) -> bool {
        for _ in 0..MAX_CHAIN_ITERS {
            let kin: Vec<Solid> = self
                .bodies
                .iter()
                .filter(|b| b.live() && b.kinematic)
                .map(|b| b.solid)
                .chain(self.gripper)
                .collect();
            // kinematic contacts first
            let mut pushed = false;
            for i in 0..self.bodies.len() {
                if !self.bodies[i].live() || self.bodies[i].kinematic {
                    continue;
                }
                for k in &kin {
                    let s = self.bodies[i].solid;
                    if !penetrating(k, &s, PEN_TOL) {
                        continue;
                    }
                    let plus = overlap_along(k, &s, lateral);
                    let minus = overlap_along(k, &s, &-lateral);
                    let d = if plus <= minus { lateral * (plus + PUSH_MARGIN) } else { -lateral * (minus + PUSH_MARGIN) };
                    self.bodies[i].shift(&d);
                    self.clamp_to_walls(i);
                    pushed = true;
                }
            }
            // deepest dynamic pair
            let mut deepest: Option<(f64, usize, usize, Vec3)> = None;
            for i in 0..self.bodies.len() {
                if !self.bodies[i].live() || self.bodies[i].kinematic {
                    continue;
                }
                for j in i + 1..self.bodies.len() {
                    if !self.bodies[j].live() || self.bodies[j].kinematic {
                        continue;
                    }
                    let (a, b) = (&self.bodies[i].solid, &self.bodies[j].solid);
                    if penetrating(a, b, PEN_TOL) {
                        let sep = separation(a, b);
                        if deepest.as_ref().is_none_or(|d| sep.value > d.0) {
                            deepest = Some((sep.value, i, j, sep.normal));
                        }
                    }
                }
            }
            let Some((_, i, j, n)) = deepest else {
                if !pushed {
                    return true;
                }
                continue;
            };
            let (a, b) = (self.bodies[i].solid, self.bodies[j].solid);
            let h = horizontal(&n);
            if h.norm() > 0.3 {
                let dir = h.normalize();
                let amount = overlap_along(&a, &b, &dir) + PUSH_MARGIN;
                self.bodies[i].shift(&(-dir * (amount / 2.0)));
                self.bodies[j].shift(&(dir * (amount / 2.0)));
                self.clamp_to_walls(i);
                self.clamp_to_walls(j);
            } else {
                let (lower, upper) = if a.center.z <= b.center.z { (i, j) } else { (j, i) };
                let amount = overlap_along(&self.bodies[lower].solid, &self.bodies[upper].solid, &Vec3::z()) + PUSH_MARGIN;
                self.bodies[upper].shift(&Vec3::new(0.0, 0.0, amount));
            }
        }
        false
    }

    /// Separates penetrating pairs along their minimum-translation vectors,
    /// deepest first, keeping bodies inside the workspace box.
    pub fn resolve_interpenetration(&mut self, eps: f64, max_iters: usize) -> Result<()> {
        let mut depth = 0.0;
        for _ in 0..max_iters {
            let mut deepest: Option<(f64, usize, usize, Vec3)> = None;
            for i in 0..self.bodies.len() {
                for j in i + 1..self.bodies.len() {
                    let (a, b) = (&self.bodies[i].solid, &self.bodies[j].solid);
                    if penetrating(a, b, eps) {
                        let sep = separation(a, b);
                        if deepest.as_ref().is_none_or(|d| sep.value > d.0) {
                            deepest = Some((sep.value, i, j, sep.normal));
                        }
                    }
                }
            }
            let Some((value, i, j, n)) = deepest else {
                return Ok(());
            };
            depth = value;
            let half = (value + 0.5 * eps) / 2.0;
            self.bodies[i].shift(&(-n * half));
            self.bodies[j].shift(&(n * half));
            self.clamp_to_box(i);
            self.clamp_to_box(j);
        }
        let remaining = self.max_penetration();
        if remaining <= eps {
            return Ok(());
        }
        Err(Error::ResolutionFailed {
            iterations: max_iters,
            depth: depth.max(remaining),
        })
    }

    pub fn max_penetration(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.bodies.len() {
            for j in i + 1..self.bodies.len() {
                if let Some(sep) = separation_within(&self.bodies[i].solid, &self.bodies[j].solid, 0.0) {
                    worst = worst.max(sep.value);
                }
            }
        }
        worst
    }

    /// Moves body `i` so its bounding box lies inside the workspace box.
    pub fn clamp_to_box(&mut self, i: usize) {
        let (lo, hi) = self.bodies[i].solid.aabb();
        let mut min = self.ws.lo();
        min.z = min.z.max(self.ws.floor_z);
        let max = self.ws.hi();
        let mut d = Vec3::zeros();
        for k in 0..3 {
            if hi[k] - lo[k] >= max[k] - min[k] {
                d[k] = (min[k] + max[k]) / 2.0 - (lo[k] + hi[k]) / 2.0;
            } else if lo[k] < min[k] {
                d[k] = min[k] - lo[k];
            } else if hi[k] > max[k] {
                d[k] = max[k] - hi[k];
            }
        }
        if d != Vec3::zeros() {
            self.bodies[i].shift(&d);
        }
    }

    pub fn shift_body(&mut self, i: usize, d: &Vec3) {
        self.bodies[i].shift(d);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ShapeModel;

    fn cube(id: u32, x: f64, y: f64, z: f64, size: f64) -> ObjectInstance {
        ObjectInstance {
            id,
            class_label: "cube".into(),
            shape: ShapeModel::cuboid(size, size, size).unwrap(),
            pose: Pose6D::new(x, y, z, 0.0, 0.0, 0.0),
        }
    }

    #[test]
    fn resting_box_has_full_coverage() {
        let s = Scene::new(WorkspaceSpec::container(), vec![cube(1, 0.5, 0.4, 0.05 + 1e-6, 0.1)], 0);
        let w = World::new(&s);
        let c = w.coverage(0);
        assert!(c.fraction > 0.99, "{}", c.fraction);
        assert_eq!(c.supporters, vec![Support::Floor]);
    }

    #[test]
    fn stacked_box_is_supported_by_body() {
        let s = Scene::new(
            WorkspaceSpec::container(),
            vec![cube(1, 0.5, 0.4, 0.05, 0.1), cube(2, 0.5, 0.4, 0.15 + 1e-6, 0.1)],
            0,
        );
        let w = World::new(&s);
        let c = w.coverage(1);
        assert!(c.fraction > 0.99, "{}", c.fraction);
        assert_eq!(c.supporters, vec![Support::Body(0)]);
    }

    #[test]
    fn overhanging_box_slides_off_and_drops() {
        let s = Scene::new(
            WorkspaceSpec::container(),
            vec![cube(1, 0.5, 0.4, 0.05, 0.1), cube(2, 0.585, 0.4, 0.15 + 1e-6, 0.1)],
            0,
        );
        let mut w = World::new(&s);
        assert!(w.coverage(1).fraction < MIN_COVERAGE);
        w.settle().unwrap();
        let top = &w.bodies[1];
        assert!((top.solid.base_z() - 0.0).abs() < 2e-6, "{}", top.solid.base_z());
        assert!(top.center().x > 0.6);
        assert!(w.max_penetration() <= 1e-4);
    }

    #[test]
    fn ball_on_slanted_support_rolls() {
        let ball = ObjectInstance {
            id: 2,
            class_label: "ball".into(),
            shape: ShapeModel::sphere(0.05).unwrap(),
            pose: Pose6D::new(0.5, 0.45, 0.2, 0.0, 0.0, 0.0),
        };
        // lands on the top edge of the cube, beyond its +y face
        let s = Scene::new(WorkspaceSpec::container(), vec![cube(1, 0.5, 0.37, 0.05, 0.1), ball], 0);
        let mut w = World::new(&s);
        w.settle().unwrap();
        let b = &w.bodies[1];
        assert!((b.solid.base_z()).abs() < 2e-6, "ball should reach the floor, z={}", b.solid.base_z());
        assert!(b.center().y > 0.42);
    }
}

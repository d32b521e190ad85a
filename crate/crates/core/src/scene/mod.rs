//! Scene data model, file format, workspace presets and the object class catalog.

mod generate;

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{separation_within, Pose6D, ShapeKind, ShapeModel, Solid, Vec3};

pub use generate::{
    cluster_centroid, generate_scene, make_variants, resolve_interpenetration, VariantNoise,
    MAX_CLASSES, MAX_GENERATION_ATTEMPTS, MAX_RESOLVE_ITERATIONS,
};

/// Maximum tolerated pairwise penetration depth, in workspace units.
pub const EPS_PEN: f64 = 1e-4;

pub const SCENE_FILE_VERSION: u32 = 1;

/// A lateral workspace face.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Face {
    #[serde(rename = "+x")]
    PosX,
    #[serde(rename = "-x")]
    NegX,
    #[serde(rename = "+y")]
    PosY,
    #[serde(rename = "-y")]
    NegY,
}

impl Face {
    pub const ALL: [Face; 4] = [Face::PosX, Face::NegX, Face::PosY, Face::NegY];

    pub fn axis(self) -> usize {
        match self {
            Face::PosX | Face::NegX => 0,
            Face::PosY | Face::NegY => 1,
        }
    }

    pub fn sign(self) -> f64 {
        match self {
            Face::PosX | Face::PosY => 1.0,
            Face::NegX | Face::NegY => -1.0,
        }
    }

    pub fn opposite(self) -> Face {
        match self {
            Face::PosX => Face::NegX,
            Face::NegX => Face::PosX,
            Face::PosY => Face::NegY,
            Face::NegY => Face::PosY,
        }
    }

    pub fn outward(self) -> Vec3 {
        let mut v = Vec3::zeros();
        v[self.axis()] = self.sign();
        v
    }
}

impl std::str::FromStr for Face {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "+x" => Ok(Face::PosX),
            "-x" => Ok(Face::NegX),
            "+y" => Ok(Face::PosY),
            "-y" => Ok(Face::NegY),
            _ => Err(Error::Format(format!("unknown face `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkspaceSpec {
    pub min: [f64; 3],
    pub max: [f64; 3],
    pub open_face: Face,
    pub drop_edges: Vec<Face>,
    pub floor_z: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum WorkspacePreset {
    /// Box with walls on four lateral sides; objects can fall out of the open door.
    Container,
    /// Open front and open lateral sides; only the back is a wall.
    Shelf,
}

impl WorkspaceSpec {
    pub fn new(min: [f64; 3], max: [f64; 3], open_face: Face, drop_edges: Vec<Face>, floor_z: f64) -> Result<Self> {
        let ws = Self {
            min,
            max,
            open_face,
            drop_edges,
            floor_z,
        };
        ws.validate()?;
        Ok(ws)
    }

    pub fn container() -> Self {
        Self {
            min: [0.0, 0.0, 0.0],
            max: [1.0, 0.8, 0.6],
            open_face: Face::PosX,
            drop_edges: vec![Face::PosX],
            floor_z: 0.0,
        }
    }

    pub fn shelf() -> Self {
        Self {
            min: [0.0, 0.0, 0.0],
            max: [0.5, 1.0, 0.4],
            open_face: Face::PosX,
            drop_edges: vec![Face::PosX, Face::PosY, Face::NegY],
            floor_z: 0.0,
        }
    }

    pub fn preset(p: WorkspacePreset) -> Self {
        match p {
            WorkspacePreset::Container => Self::container(),
            WorkspacePreset::Shelf => Self::shelf(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = self.min.iter().chain(&self.max).all(|v| v.is_finite()) && self.floor_z.is_finite();
        if !finite || (0..3).any(|k| self.min[k] >= self.max[k]) {
            return Err(Error::Format(format!(
                "workspace min {:?} must be below max {:?}",
                self.min, self.max
            )));
        }
        Ok(())
    }

    pub fn lo(&self) -> Vec3 {
        Vec3::from(self.min)
    }

    pub fn hi(&self) -> Vec3 {
        Vec3::from(self.max)
    }

    pub fn center(&self) -> Vec3 {
        (self.lo() + self.hi()) / 2.0
    }

    pub fn size(&self) -> Vec3 {
        self.hi() - self.lo()
    }

    pub fn diagonal(&self) -> f64 {
        self.size().norm()
    }

    pub fn depth_axis(&self) -> usize {
        self.open_face.axis()
    }

    pub fn width_axis(&self) -> usize {
        1 - self.depth_axis()
    }

    /// Extent along the approach direction.
    pub fn depth(&self) -> f64 {
        self.size()[self.depth_axis()]
    }

    pub fn width(&self) -> f64 {
        self.size()[self.width_axis()]
    }

    /// Coordinate of the plane containing `face`.
    pub fn face_coord(&self, face: Face) -> f64 {
        if face.sign() > 0.0 {
            self.max[face.axis()]
        } else {
            self.min[face.axis()]
        }
    }

    pub fn back_face(&self) -> Face {
        self.open_face.opposite()
    }

    pub fn is_drop_edge(&self, face: Face) -> bool {
        self.drop_edges.contains(&face)
    }

    /// True when `p` projects inside the lateral footprint.
    pub fn footprint_contains(&self, p: &Vec3) -> bool {
        (0..2).all(|k| p[k] >= self.min[k] && p[k] <= self.max[k])
    }

    /// A drop edge whose plane `p` lies beyond, if any.
    pub fn crossed_drop_edge(&self, p: &Vec3) -> Option<Face> {
        self.drop_edges.iter().copied().find(|&f| {
            let c = self.face_coord(f);
            (p[f.axis()] - c) * f.sign() > 0.0
        })
    }

    /// Default sensor position: above and in front of the open face.
    pub fn default_camera(&self) -> Pose6D {
        let mut p = self.center();
        let ax = self.depth_axis();
        p[ax] = self.face_coord(self.open_face) + self.open_face.sign() * 0.6 * self.depth();
        p.z = self.max[2] + 0.6 * self.size().z.max(self.depth());
        // looking back toward the workspace center
        let dir = self.center() - p;
        let yaw = dir.y.atan2(dir.x);
        let pitch = -(dir.z).atan2((dir.x * dir.x + dir.y * dir.y).sqrt());
        Pose6D::new(p.x, p.y, p.z, 0.0, pitch, yaw)
    }

    /// Default gripper home: just outside the open face at 40% height.
    pub fn default_gripper_origin(&self) -> Vec3 {
        let mut p = self.center();
        let ax = self.depth_axis();
        p[ax] = self.face_coord(self.open_face) + self.open_face.sign() * 0.15 * self.depth();
        p.z = self.floor_z + 0.4 * (self.max[2] - self.floor_z);
        p
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectInstance {
    pub id: u32,
    #[serde(rename = "class")]
    pub class_label: String,
    pub shape: ShapeModel,
    pub pose: Pose6D,
}

impl ObjectInstance {
    pub fn solid(&self) -> Solid {
        Solid::new(&self.shape, &self.pose)
    }

    pub fn centroid(&self) -> Vec3 {
        self.pose.translation()
    }

    /// Surface samples in the world frame.
    pub fn world_samples(&self) -> Vec<Vec3> {
        let rot = self.pose.rotation();
        let t = self.pose.translation();
        self.shape.surface_samples().iter().map(|p| rot * p + t).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub workspace: WorkspaceSpec,
    pub objects: Vec<ObjectInstance>,
    pub camera_pose: Pose6D,
    pub gripper_origin: Vec3,
    pub rng_seed: u64,
}

#[derive(Serialize, Deserialize)]
struct SceneFile {
    version: u32,
    workspace: WorkspaceSpec,
    camera_pose: Pose6D,
    gripper_origin: [f64; 3],
    seed: u64,
    objects: Vec<ObjectInstance>,
}

impl Serialize for Scene {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        SceneFile {
            version: SCENE_FILE_VERSION,
            workspace: self.workspace.clone(),
            camera_pose: self.camera_pose,
            gripper_origin: self.gripper_origin.into(),
            seed: self.rng_seed,
            objects: self.objects.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Scene {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let f = SceneFile::deserialize(d)?;
        if f.version != SCENE_FILE_VERSION {
            return Err(D::Error::custom(format!("unsupported scene file version {}", f.version)));
        }
        Ok(Scene {
            workspace: f.workspace,
            objects: f.objects,
            camera_pose: f.camera_pose,
            gripper_origin: Vec3::from(f.gripper_origin),
            rng_seed: f.seed,
        })
    }
}

/// Result of checking a scene against its invariants.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SceneCheck {
    pub max_penetration: f64,
    /// Largest protrusion of any hull beyond the workspace box.
    pub max_protrusion: f64,
    pub duplicate_ids: Vec<u32>,
    pub non_finite: Vec<u32>,
}

impl SceneCheck {
    pub fn is_valid(&self) -> bool {
        self.max_penetration <= EPS_PEN
            && self.max_protrusion <= EPS_PEN
            && self.duplicate_ids.is_empty()
            && self.non_finite.is_empty()
    }
}

impl Scene {
    pub fn new(workspace: WorkspaceSpec, objects: Vec<ObjectInstance>, rng_seed: u64) -> Self {
        Self {
            camera_pose: workspace.default_camera(),
            gripper_origin: workspace.default_gripper_origin(),
            workspace,
            objects,
            rng_seed,
        }
    }

    pub fn object(&self, id: u32) -> Option<&ObjectInstance> {
        self.objects.iter().find(|o| o.id == id)
    }

    pub fn ids(&self) -> Vec<u32> {
        self.objects.iter().map(|o| o.id).collect()
    }

    pub fn sorted_ids(&self) -> Vec<u32> {
        let mut ids = self.ids();
        ids.sort_unstable();
        ids
    }

    pub fn without(&self, id: u32) -> Scene {
        let mut s = self.clone();
        s.objects.retain(|o| o.id != id);
        s
    }

    pub fn check(&self) -> SceneCheck {
        let mut out = SceneCheck::default();
        let mut seen = BTreeSet::new();
        for o in &self.objects {
            if !seen.insert(o.id) {
                out.duplicate_ids.push(o.id);
            }
            if !o.pose.is_finite() {
                out.non_finite.push(o.id);
            }
        }
        if !out.non_finite.is_empty() {
            return out;
        }
        let solids: Vec<Solid> = self.objects.iter().map(|o| o.solid()).collect();
        for (i, a) in solids.iter().enumerate() {
            let (lo, hi) = a.aabb();
            let ws_lo = self.workspace.lo();
            let ws_hi = self.workspace.hi();
            for k in 0..3 {
                let floor = if k == 2 { self.workspace.floor_z.max(ws_lo[k]) } else { ws_lo[k] };
                out.max_protrusion = out.max_protrusion.max(floor - lo[k]).max(hi[k] - ws_hi[k]);
            }
            for b in &solids[i + 1..] {
                if let Some(sep) = separation_within(a, b, 0.0) {
                    out.max_penetration = out.max_penetration.max(sep.value);
                }
            }
        }
        out
    }

    /// Validator for emitted scenes.
    pub fn validate(&self) -> Result<()> {
        self.workspace.validate()?;
        let c = self.check();
        if let Some(&id) = c.duplicate_ids.first() {
            return Err(Error::DuplicateObject(id));
        }
        if !c.non_finite.is_empty() {
            return Err(Error::Format(format!("non-finite poses for {:?}", c.non_finite)));
        }
        if c.max_penetration > EPS_PEN {
            return Err(Error::Format(format!("penetration {:.3e} exceeds tolerance", c.max_penetration)));
        }
        if c.max_protrusion > EPS_PEN {
            return Err(Error::Format(format!("object protrudes {:.3e} outside workspace", c.max_protrusion)));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let scene: Scene = serde_json::from_str(s)?;
        scene.workspace.validate()?;
        Ok(scene)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()? + "\n")?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Shape for a class label: a catalog name, or an inline `box:LxWxH`,
/// `cylinder:RxH` or `sphere:R` spec.
pub fn class_shape(class: &str) -> Result<ShapeModel> {
    if let Some((kind, dims)) = class.split_once(':') {
        let dims: Vec<f64> = dims
            .split('x')
            .map(|d| d.parse::<f64>().map_err(|_| Error::UnknownClass(class.to_string())))
            .collect::<Result<_>>()?;
        let kind = match kind {
            "box" => ShapeKind::Box,
            "cylinder" => ShapeKind::Cylinder,
            "sphere" => ShapeKind::Sphere,
            _ => return Err(Error::UnknownClass(class.to_string())),
        };
        return ShapeModel::new(kind, dims);
    }
    match class {
        "cube" => ShapeModel::cuboid(0.1, 0.1, 0.1),
        "carton" => ShapeModel::cuboid(0.2, 0.15, 0.12),
        "crate" => ShapeModel::cuboid(0.25, 0.2, 0.18),
        "flat_box" => ShapeModel::cuboid(0.3, 0.2, 0.06),
        "can" => ShapeModel::cylinder(0.04, 0.12),
        "tube" => ShapeModel::cylinder(0.035, 0.2),
        "ball" => ShapeModel::sphere(0.06),
        _ => Err(Error::UnknownClass(class.to_string())),
    }
}

pub const CATALOG: [&str; 7] = ["cube", "carton", "crate", "flat_box", "can", "tube", "ball"];

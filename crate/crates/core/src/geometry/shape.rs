use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::hull::convex_hull;
use crate::geometry::Vec3;

pub const SURFACE_SAMPLES: usize = 500;

const GOLDEN_ANGLE: f64 = 2.399_963_229_728_653;
// inverse powers of the plastic number, a 2-D low-discrepancy sequence
const R2_A1: f64 = 0.754_877_666_246_692_7;
const R2_A2: f64 = 0.569_840_290_998_053_3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShapeKind {
    Box,
    Cylinder,
    Sphere,
}

/// Primitive object model centered on its centroid.
///
/// Box dims are full extents along body x, y, z. Cylinders have their axis on
/// body z. Samples are deterministic in kind and dims.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "ShapeSpec", into = "ShapeSpec")]
pub struct ShapeModel {
    kind: ShapeKind,
    dims: Vec<f64>,
    samples: Arc<Vec<Vec3>>,
    hull_points: Arc<Vec<Vec3>>,
    sampled_volume: f64,
}

impl PartialEq for ShapeModel {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind && self.dims == other.dims
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ShapeSpec {
    pub kind: ShapeKind,
    pub dims: Vec<f64>,
}

impl TryFrom<ShapeSpec> for ShapeModel {
    type Error = Error;
    fn try_from(s: ShapeSpec) -> Result<Self> {
        ShapeModel::new(s.kind, s.dims)
    }
}

impl From<ShapeModel> for ShapeSpec {
    fn from(s: ShapeModel) -> Self {
        ShapeSpec {
            kind: s.kind,
            dims: s.dims,
        }
    }
}

impl ShapeModel {
    pub fn new(kind: ShapeKind, dims: Vec<f64>) -> Result<Self> {
        let expected = match kind {
            ShapeKind::Box => 3,
            ShapeKind::Cylinder => 2,
            ShapeKind::Sphere => 1,
        };
        if dims.len() != expected {
            return Err(Error::InvalidShape(format!(
                "{kind:?} needs {expected} dims, got {}",
                dims.len()
            )));
        }
        if dims.iter().any(|d| !d.is_finite() || *d <= 0.0) {
            return Err(Error::InvalidShape(format!("dims must be positive, got {dims:?}")));
        }
        let samples = match kind {
            ShapeKind::Box => box_samples(dims[0], dims[1], dims[2]),
            ShapeKind::Cylinder => cylinder_samples(dims[0], dims[1]),
            ShapeKind::Sphere => sphere_samples(dims[0]),
        };
        debug_assert_eq!(samples.len(), SURFACE_SAMPLES);
        let hull = convex_hull(&samples)?.ok_or(Error::DegenerateShape)?;
        let hull_points = hull.vertices.iter().map(|&i| samples[i]).collect();
        Ok(Self {
            kind,
            dims,
            samples: Arc::new(samples),
            hull_points: Arc::new(hull_points),
            sampled_volume: hull.volume,
        })
    }

    pub fn cuboid(lx: f64, ly: f64, lz: f64) -> Result<Self> {
        Self::new(ShapeKind::Box, vec![lx, ly, lz])
    }

    pub fn cylinder(radius: f64, height: f64) -> Result<Self> {
        Self::new(ShapeKind::Cylinder, vec![radius, height])
    }

    pub fn sphere(radius: f64) -> Result<Self> {
        Self::new(ShapeKind::Sphere, vec![radius])
    }

    pub fn kind(&self) -> ShapeKind {
        self.kind
    }

    pub fn dims(&self) -> &[f64] {
        &self.dims
    }

    pub fn surface_samples(&self) -> &[Vec3] {
        &self.samples
    }

    /// Hull vertices of the sampled cloud; transforming these suffices for swept hulls.
    pub fn hull_points(&self) -> &[Vec3] {
        &self.hull_points
    }

    pub fn sampled_volume(&self) -> f64 {
        self.sampled_volume
    }

    /// Analytic volume, used as the mass proxy.
    pub fn volume(&self) -> f64 {
        match self.kind {
            ShapeKind::Box => self.dims[0] * self.dims[1] * self.dims[2],
            ShapeKind::Cylinder => PI * self.dims[0].powi(2) * self.dims[1],
            ShapeKind::Sphere => 4.0 / 3.0 * PI * self.dims[0].powi(3),
        }
    }

    /// Full extents of the body-frame bounding box.
    pub fn body_extents(&self) -> Vec3 {
        match self.kind {
            ShapeKind::Box => Vec3::new(self.dims[0], self.dims[1], self.dims[2]),
            ShapeKind::Cylinder => Vec3::new(2.0 * self.dims[0], 2.0 * self.dims[0], self.dims[1]),
            ShapeKind::Sphere => Vec3::repeat(2.0 * self.dims[0]),
        }
    }

    pub fn bounding_radius(&self) -> f64 {
        self.body_extents().norm() / 2.0
    }

    pub fn max_extent(&self) -> f64 {
        self.body_extents().max()
    }
}

fn frac(x: f64) -> f64 {
    x - x.floor()
}

/// Splits `total` over `weights` by largest remainder.
fn apportion(total: usize, weights: &[f64]) -> Vec<usize> {
    let sum: f64 = weights.iter().sum();
    let raw: Vec<f64> = weights.iter().map(|w| w / sum * total as f64).collect();
    let mut counts: Vec<usize> = raw.iter().map(|r| r.floor() as usize).collect();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| frac(raw[b]).total_cmp(&frac(raw[a])).then(a.cmp(&b)));
    let mut left = total - counts.iter().sum::<usize>();
    for &i in order.iter().cycle() {
        if left == 0 {
            break;
        }
        counts[i] += 1;
        left -= 1;
    }
    counts
}

fn box_samples(lx: f64, ly: f64, lz: f64) -> Vec<Vec3> {
    let h = Vec3::new(lx / 2.0, ly / 2.0, lz / 2.0);
    let mut pts = Vec::with_capacity(SURFACE_SAMPLES);
    for sx in [-1.0, 1.0] {
        for sy in [-1.0, 1.0] {
            for sz in [-1.0, 1.0] {
                pts.push(Vec3::new(sx * h.x, sy * h.y, sz * h.z));
            }
        }
    }
    const PER_EDGE: usize = 8;
    for axis in 0..3 {
        let (u, v) = ((axis + 1) % 3, (axis + 2) % 3);
        for su in [-1.0, 1.0] {
            for sv in [-1.0, 1.0] {
                for k in 1..=PER_EDGE {
                    let t = k as f64 / (PER_EDGE + 1) as f64 * 2.0 - 1.0;
                    let mut p = Vec3::zeros();
                    p[axis] = t * h[axis];
                    p[u] = su * h[u];
                    p[v] = sv * h[v];
                    pts.push(p);
                }
            }
        }
    }
    // faces: normal axis, sign
    let faces: Vec<(usize, f64)> = (0..3).flat_map(|a| [(a, -1.0), (a, 1.0)]).collect();
    let areas: Vec<f64> = faces
        .iter()
        .map(|&(a, _)| 4.0 * h[(a + 1) % 3] * h[(a + 2) % 3])
        .collect();
    let counts = apportion(SURFACE_SAMPLES - pts.len(), &areas);
    for (&(axis, sign), &count) in faces.iter().zip(&counts) {
        let (u, v) = ((axis + 1) % 3, (axis + 2) % 3);
        for k in 0..count {
            let s = frac(0.5 + R2_A1 * (k + 1) as f64);
            let t = frac(0.5 + R2_A2 * (k + 1) as f64);
            let mut p = Vec3::zeros();
            p[axis] = sign * h[axis];
            p[u] = (2.0 * s - 1.0) * h[u];
            p[v] = (2.0 * t - 1.0) * h[v];
            pts.push(p);
        }
    }
    pts
}

fn cylinder_samples(r: f64, height: f64) -> Vec<Vec3> {
    let hz = height / 2.0;
    let mut pts = Vec::with_capacity(SURFACE_SAMPLES);
    const RIM: usize = 64;
    for z in [-hz, hz] {
        for k in 0..RIM {
            let a = 2.0 * PI * k as f64 / RIM as f64;
            pts.push(Vec3::new(r * a.cos(), r * a.sin(), z));
        }
    }
    let cap_area = PI * r * r;
    let counts = apportion(
        SURFACE_SAMPLES - pts.len(),
        &[cap_area, cap_area, 2.0 * PI * r * height],
    );
    for (cap, z) in [(counts[0], -hz), (counts[1], hz)] {
        for k in 0..cap {
            let rho = r * ((k as f64 + 0.5) / cap as f64).sqrt();
            let a = GOLDEN_ANGLE * k as f64;
            pts.push(Vec3::new(rho * a.cos(), rho * a.sin(), z));
        }
    }
    let side = counts[2];
    for k in 0..side {
        let a = GOLDEN_ANGLE * k as f64;
        let z = ((k as f64 + 0.5) / side as f64 * 2.0 - 1.0) * hz;
        pts.push(Vec3::new(r * a.cos(), r * a.sin(), z));
    }
    pts
}

fn sphere_samples(r: f64) -> Vec<Vec3> {
    let n = SURFACE_SAMPLES;
    (0..n)
        .map(|k| {
            let z = 1.0 - (2.0 * k as f64 + 1.0) / n as f64;
            let rho = (1.0 - z * z).sqrt();
            let a = GOLDEN_ANGLE * k as f64;
            Vec3::new(r * rho * a.cos(), r * rho * a.sin(), r * z)
        })
        .collect()
}

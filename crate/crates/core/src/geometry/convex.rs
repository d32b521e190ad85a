//! Placed primitive solids: support functions, signed separation, ray and
//! point queries. Used by the scene simulator.

use std::sync::OnceLock;

use nalgebra::Matrix3;

use crate::geometry::{Pose6D, ShapeKind, ShapeModel, Vec3};

const FIB_DIRECTIONS: usize = 160;

fn fibonacci_directions() -> &'static [Vec3] {
    static DIRS: OnceLock<Vec<Vec3>> = OnceLock::new();
    DIRS.get_or_init(|| {
        let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
        (0..FIB_DIRECTIONS)
            .map(|k| {
                let z = 1.0 - (2.0 * k as f64 + 1.0) / FIB_DIRECTIONS as f64;
                let r = (1.0 - z * z).sqrt();
                let a = golden * k as f64;
                Vec3::new(r * a.cos(), r * a.sin(), z)
            })
            .collect()
    })
}

/// A primitive at a world pose.
#[derive(Debug, Clone, Copy)]
pub struct Solid {
    pub kind: ShapeKind,
    pub center: Vec3,
    /// Body axes as columns.
    pub axes: Matrix3<f64>,
    /// Box: half extents. Cylinder: (r, r, h/2). Sphere: (r, r, r).
    pub half: Vec3,
}

/// Signed separation between two solids.
#[derive(Debug, Clone, Copy)]
pub struct Separation {
    /// Penetration depth when positive, negated surface distance when negative.
    pub value: f64,
    /// Unit direction from the first solid toward the second.
    pub normal: Vec3,
}

impl Separation {
    pub fn distance(&self) -> f64 {
        -self.value
    }
}

fn sign0(x: f64) -> f64 {
    if x > 1e-12 {
        1.0
    } else if x < -1e-12 {
        -1.0
    } else {
        0.0
    }
}

impl Solid {
    pub fn new(shape: &ShapeModel, pose: &Pose6D) -> Self {
        let d = shape.dims();
        let half = match shape.kind() {
            ShapeKind::Box => Vec3::new(d[0], d[1], d[2]) / 2.0,
            ShapeKind::Cylinder => Vec3::new(d[0], d[0], d[1] / 2.0),
            ShapeKind::Sphere => Vec3::repeat(d[0]),
        };
        Self {
            kind: shape.kind(),
            center: pose.translation(),
            axes: *pose.rotation().matrix(),
            half,
        }
    }

    pub fn aligned_box(center: Vec3, half: Vec3) -> Self {
        Self {
            kind: ShapeKind::Box,
            center,
            axes: Matrix3::identity(),
            half,
        }
    }

    pub fn axis(&self, k: usize) -> Vec3 {
        self.axes.column(k).into_owned()
    }

    pub fn bounding_radius(&self) -> f64 {
        match self.kind {
            ShapeKind::Box => self.half.norm(),
            ShapeKind::Cylinder => (self.half.x.powi(2) + self.half.z.powi(2)).sqrt(),
            ShapeKind::Sphere => self.half.x,
        }
    }

    /// `max_{x in S} x . d`
    pub fn support(&self, d: &Vec3) -> f64 {
        let c = self.center.dot(d);
        match self.kind {
            ShapeKind::Box => {
                c + (0..3)
                    .map(|k| self.half[k] * self.axis(k).dot(d).abs())
                    .sum::<f64>()
            }
            ShapeKind::Cylinder => {
                let a = self.axis(2);
                let ad = a.dot(d);
                let radial = (d.norm_squared() - ad * ad).max(0.0).sqrt();
                c + self.half.z * ad.abs() + self.half.x * radial
            }
            ShapeKind::Sphere => c + self.half.x * d.norm(),
        }
    }

    /// A maximizer of `x . d`; picks face or cap centers on ties.
    pub fn support_point(&self, d: &Vec3) -> Vec3 {
        match self.kind {
            ShapeKind::Box => {
                let mut p = self.center;
                for k in 0..3 {
                    let a = self.axis(k);
                    p += a * (sign0(a.dot(d)) * self.half[k]);
                }
                p
            }
            ShapeKind::Cylinder => {
                let a = self.axis(2);
                let ad = a.dot(d);
                let radial = d - a * ad;
                let rn = radial.norm();
                let mut p = self.center + a * (sign0(ad) * self.half.z);
                if rn > 1e-12 * d.norm().max(1e-300) {
                    p += radial * (self.half.x / rn);
                }
                p
            }
            ShapeKind::Sphere => {
                let n = d.norm();
                if n > 0.0 {
                    self.center + d * (self.half.x / n)
                } else {
                    self.center
                }
            }
        }
    }

    /// `(min, max)` corners of the world-frame bounding box.
    pub fn aabb(&self) -> (Vec3, Vec3) {
        let mut lo = Vec3::zeros();
        let mut hi = Vec3::zeros();
        for k in 0..3 {
            let mut e = Vec3::zeros();
            e[k] = 1.0;
            hi[k] = self.support(&e);
            lo[k] = -self.support(&-e);
        }
        (lo, hi)
    }

    pub fn base_z(&self) -> f64 {
        -self.support(&-Vec3::z())
    }

    pub fn translated(&self, d: &Vec3) -> Self {
        Self {
            center: self.center + d,
            ..*self
        }
    }

    fn local(&self, p: &Vec3) -> Vec3 {
        self.axes.transpose() * (p - self.center)
    }

    /// Signed distance from `p` to the surface, negative inside.
    pub fn signed_distance(&self, p: &Vec3) -> f64 {
        let q = self.local(p);
        match self.kind {
            ShapeKind::Box => {
                let d = q.abs() - self.half;
                let outside = d.sup(&Vec3::zeros()).norm();
                let inside = d.max().min(0.0);
                outside + inside
            }
            ShapeKind::Cylinder => {
                let radial = (q.x * q.x + q.y * q.y).sqrt() - self.half.x;
                let axial = q.z.abs() - self.half.z;
                let outside = (radial.max(0.0).powi(2) + axial.max(0.0).powi(2)).sqrt();
                outside + radial.max(axial).min(0.0)
            }
            ShapeKind::Sphere => (p - self.center).norm() - self.half.x,
        }
    }

    /// Parameter interval where `origin + t * dir` lies inside the solid.
    pub fn ray_interval(&self, origin: &Vec3, dir: &Vec3) -> Option<(f64, f64)> {
        let o = self.local(origin);
        let d = self.axes.transpose() * dir;
        let slab = |o: f64, d: f64, h: f64, lo: &mut f64, hi: &mut f64| -> bool {
            if d.abs() < 1e-300 {
                return o.abs() <= h;
            }
            let (mut t0, mut t1) = ((-h - o) / d, (h - o) / d);
            if t0 > t1 {
                std::mem::swap(&mut t0, &mut t1);
            }
            *lo = lo.max(t0);
            *hi = hi.min(t1);
            *lo <= *hi
        };
        let mut lo = f64::NEG_INFINITY;
        let mut hi = f64::INFINITY;
        match self.kind {
            ShapeKind::Box => {
                for k in 0..3 {
                    if !slab(o[k], d[k], self.half[k], &mut lo, &mut hi) {
                        return None;
                    }
                }
                Some((lo, hi))
            }
            ShapeKind::Sphere => {
                let r = self.half.x;
                let a = d.norm_squared();
                let b = o.dot(&d);
                let c = o.norm_squared() - r * r;
                let disc = b * b - a * c;
                if a == 0.0 || disc < 0.0 {
                    return None;
                }
                let s = disc.sqrt();
                Some(((-b - s) / a, (-b + s) / a))
            }
            ShapeKind::Cylinder => {
                if !slab(o.z, d.z, self.half.z, &mut lo, &mut hi) {
                    return None;
                }
                let r = self.half.x;
                let a = d.x * d.x + d.y * d.y;
                let c = o.x * o.x + o.y * o.y - r * r;
                if a < 1e-300 {
                    return (c <= 0.0).then_some((lo, hi));
                }
                let b = o.x * d.x + o.y * d.y;
                let disc = b * b - a * c;
                if disc < 0.0 {
                    return None;
                }
                let s = disc.sqrt();
                lo = lo.max((-b - s) / a);
                hi = hi.min((-b + s) / a);
                (lo <= hi).then_some((lo, hi))
            }
        }
    }

    fn feature_axes(&self) -> Vec<Vec3> {
        match self.kind {
            ShapeKind::Box => (0..3).map(|k| self.axis(k)).collect(),
            ShapeKind::Cylinder => vec![self.axis(2)],
            ShapeKind::Sphere => Vec::new(),
        }
    }
}

/// Overlap of the projections of `a` and `b` on `d`; moving `b` by
/// `overlap * d` makes them touch along that axis.
pub fn overlap_along(a: &Solid, b: &Solid, d: &Vec3) -> f64 {
    a.support(d) + b.support(&-d)
}

fn refine(a: &Solid, b: &Solid, mut d: Vec3, mut f: f64) -> (f64, Vec3) {
    let mut step = 0.1;
    let mut iters = 0;
    while step > 1e-10 && iters < 400 {
        iters += 1;
        let helper = if d.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
        let t1 = d.cross(&helper).normalize();
        let t2 = d.cross(&t1);
        let mut improved = false;
        for (s1, s2) in [
            (1.0, 0.0),
            (-1.0, 0.0),
            (0.0, 1.0),
            (0.0, -1.0),
            (0.7, 0.7),
            (-0.7, 0.7),
            (0.7, -0.7),
            (-0.7, -0.7),
        ] {
            let cand = (d + (t1 * s1 + t2 * s2) * step).normalize();
            let fc = overlap_along(a, b, &cand);
            if fc < f {
                f = fc;
                d = cand;
                improved = true;
                break;
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    (f, d)
}

fn candidate_axes(a: &Solid, b: &Solid) -> Vec<Vec3> {
    let mut cands: Vec<Vec3> = Vec::with_capacity(FIB_DIRECTIONS + 40);
    let fa = a.feature_axes();
    let fb = b.feature_axes();
    for ax in fa.iter().chain(&fb) {
        cands.push(*ax);
        cands.push(-ax);
    }
    for x in &fa {
        for y in &fb {
            let c = x.cross(y);
            if c.norm() > 1e-9 {
                let c = c.normalize();
                cands.push(c);
                cands.push(-c);
            }
        }
    }
    let diff = b.center - a.center;
    if diff.norm() > 1e-12 {
        let u = diff.normalize();
        cands.push(u);
        for sol in [a, b] {
            if sol.kind == ShapeKind::Cylinder {
                let ax = sol.axis(2);
                let radial = u - ax * ax.dot(&u);
                if radial.norm() > 1e-9 {
                    cands.push(radial.normalize());
                }
            }
        }
    }
    cands.push(Vec3::z());
    cands.push(-Vec3::z());
    cands.extend_from_slice(fibonacci_directions());
    cands
}

/// Minimum over unit directions of `h_a(d) + h_b(-d)`: the penetration depth
/// when positive, minus the distance when negative.
pub fn separation(a: &Solid, b: &Solid) -> Separation {
    let mut scored: Vec<(f64, Vec3)> = candidate_axes(a, b)
        .into_iter()
        .map(|d| (overlap_along(a, b, &d), d))
        .collect();
    scored.sort_by(|x, y| x.0.total_cmp(&y.0));

    let (mut best_f, mut best_d) = scored[0];
    // face normals and edge cross products are exhaustive for overlapping boxes
    let exact = a.kind == ShapeKind::Box && b.kind == ShapeKind::Box && best_f > 0.0
        || a.kind == ShapeKind::Sphere && b.kind == ShapeKind::Sphere;
    if !exact {
        for &(f, d) in scored.iter().take(4) {
            let (rf, rd) = refine(a, b, d, f);
            if rf < best_f {
                best_f = rf;
                best_d = rd;
            }
        }
    }
    Separation {
        value: best_f,
        normal: best_d,
    }
}

/// Upper bound on the separation value from the candidate axes alone; its
/// negation is a lower bound on the distance.
pub fn separation_bound(a: &Solid, b: &Solid) -> f64 {
    candidate_axes(a, b)
        .iter()
        .map(|d| overlap_along(a, b, d))
        .fold(f64::INFINITY, f64::min)
}

/// True when the solids overlap by more than `tol`.
pub fn penetrating(a: &Solid, b: &Solid, tol: f64) -> bool {
    if (b.center - a.center).norm() - a.bounding_radius() - b.bounding_radius() > tol {
        return false;
    }
    if candidate_axes(a, b).iter().any(|d| overlap_along(a, b, d) <= tol) {
        return false;
    }
    separation(a, b).value > tol
}

/// Separation, or `None` when bounding spheres are farther apart than `margin`.
pub fn separation_within(a: &Solid, b: &Solid, margin: f64) -> Option<Separation> {
    let gap = (b.center - a.center).norm() - a.bounding_radius() - b.bounding_radius();
    if gap > margin {
        return None;
    }
    let (alo, ahi) = a.aabb();
    let (blo, bhi) = b.aabb();
    for k in 0..3 {
        if blo[k] - ahi[k] > margin || alo[k] - bhi[k] > margin {
            return None;
        }
    }
    Some(separation(a, b))
}

//! 3-D convex hulls by quickhull.
//!
//! Points within a scale-relative tolerance of a face plane are treated as
//! lying on it, so coplanar and cospherical inputs do not produce slivers.
//! Degenerate inputs (all points collinear or coplanar) yield no hull and
//! zero volume.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::geometry::Vec3;

const REL_EPS: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct ConvexHull {
    /// Indices of input points that are hull vertices, ascending.
    pub vertices: Vec<usize>,
    /// Outward-oriented triangles over input indices.
    pub faces: Vec<[usize; 3]>,
    pub volume: f64,
}

#[derive(Debug)]
struct Face {
    v: [usize; 3],
    normal: Vec3,
    offset: f64,
    outside: Vec<usize>,
    alive: bool,
}

impl Face {
    fn distance(&self, p: &Vec3) -> f64 {
        self.normal.dot(p) - self.offset
    }
}

struct Builder<'a> {
    pts: &'a [Vec3],
    eps: f64,
    faces: Vec<Face>,
    edges: HashMap<(usize, usize), usize>,
}

impl<'a> Builder<'a> {
    fn add_face(&mut self, a: usize, b: usize, c: usize) -> usize {
        let (pa, pb, pc) = (self.pts[a], self.pts[b], self.pts[c]);
        let n = (pb - pa).cross(&(pc - pa));
        let len = n.norm();
        let normal = if len > 0.0 { n / len } else { Vec3::zeros() };
        let id = self.faces.len();
        self.faces.push(Face {
            v: [a, b, c],
            normal,
            offset: normal.dot(&pa),
            outside: Vec::new(),
            alive: true,
        });
        for (u, v) in [(a, b), (b, c), (c, a)] {
            self.edges.insert((u, v), id);
        }
        id
    }

    fn kill_face(&mut self, id: usize) {
        let face = &mut self.faces[id];
        face.alive = false;
        let [a, b, c] = face.v;
        for (u, v) in [(a, b), (b, c), (c, a)] {
            if self.edges.get(&(u, v)) == Some(&id) {
                self.edges.remove(&(u, v));
            }
        }
    }

    /// Assigns each candidate to the face it lies farthest outside of.
    fn assign(&mut self, candidates: &[usize], faces: &[usize]) {
        for &p in candidates {
            let mut best = None;
            let mut best_d = self.eps;
            for &f in faces {
                let d = self.faces[f].distance(&self.pts[p]);
                if d > best_d {
                    best_d = d;
                    best = Some(f);
                }
            }
            if let Some(f) = best {
                self.faces[f].outside.push(p);
            }
        }
    }
}

fn initial_simplex(pts: &[Vec3], eps: f64) -> Option<[usize; 4]> {
    let mut extremes = [0usize; 6];
    for (i, p) in pts.iter().enumerate() {
        for axis in 0..3 {
            if p[axis] < pts[extremes[2 * axis]][axis] {
                extremes[2 * axis] = i;
            }
            if p[axis] > pts[extremes[2 * axis + 1]][axis] {
                extremes[2 * axis + 1] = i;
            }
        }
    }
    let mut best = (0.0, 0, 0);
    for &i in &extremes {
        for &j in &extremes {
            let d = (pts[i] - pts[j]).norm_squared();
            if d > best.0 {
                best = (d, i, j);
            }
        }
    }
    let (_, a, b) = best;
    if best.0.sqrt() <= eps {
        return None;
    }
    let ab = (pts[b] - pts[a]).normalize();
    let (mut c, mut dc) = (usize::MAX, eps);
    for (i, p) in pts.iter().enumerate() {
        let v = p - pts[a];
        let d = (v - ab * v.dot(&ab)).norm();
        if d > dc {
            dc = d;
            c = i;
        }
    }
    if c == usize::MAX {
        return None;
    }
    let n = (pts[b] - pts[a]).cross(&(pts[c] - pts[a])).normalize();
    let (mut d, mut dd) = (usize::MAX, eps);
    for (i, p) in pts.iter().enumerate() {
        let h = n.dot(&(p - pts[a])).abs();
        if h > dd {
            dd = h;
            d = i;
        }
    }
    if d == usize::MAX {
        return None;
    }
    Some([a, b, c, d])
}

/// Builds the hull of `points`; `Ok(None)` when the input spans less than three dimensions.
pub fn convex_hull(points: &[Vec3]) -> Result<Option<ConvexHull>> {
    if points.len() < 4 {
        return Err(Error::DegenerateInput(points.len()));
    }
    if points.iter().any(|p| !p.iter().all(|c| c.is_finite())) {
        return Err(Error::Format("non-finite point in hull input".into()));
    }
    let mut lo = points[0];
    let mut hi = points[0];
    for p in points {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    let scale = (hi - lo).amax().max(lo.amax().max(hi.amax()));
    let eps = REL_EPS * scale.max(1e-12);

    let Some([a, b, c, d]) = initial_simplex(points, eps) else {
        return Ok(None);
    };
    let mut bld = Builder {
        pts: points,
        eps,
        faces: Vec::new(),
        edges: HashMap::new(),
    };
    let centroid = (points[a] + points[b] + points[c] + points[d]) / 4.0;
    // orient the tetrahedron so every face normal points away from its centroid
    let tri = |bld: &mut Builder, x: usize, y: usize, z: usize| {
        let n = (points[y] - points[x]).cross(&(points[z] - points[x]));
        if n.dot(&(centroid - points[x])) > 0.0 {
            bld.add_face(x, z, y)
        } else {
            bld.add_face(x, y, z)
        }
    };
    let initial = vec![
        tri(&mut bld, a, b, c),
        tri(&mut bld, a, b, d),
        tri(&mut bld, a, c, d),
        tri(&mut bld, b, c, d),
    ];
    let rest: Vec<usize> = (0..points.len())
        .filter(|i| ![a, b, c, d].contains(i))
        .collect();
    bld.assign(&rest, &initial);

    let mut stack: Vec<usize> = initial;
    while let Some(fid) = stack.pop() {
        if !bld.faces[fid].alive || bld.faces[fid].outside.is_empty() {
            continue;
        }
        let eye = {
            let f = &bld.faces[fid];
            *f.outside
                .iter()
                .max_by(|&&p, &&q| f.distance(&points[p]).total_cmp(&f.distance(&points[q])))
                .expect("non-empty")
        };
        let eye_p = points[eye];

        // flood the visible region and collect its boundary edges
        let mut visible = vec![fid];
        let mut seen: HashMap<usize, bool> = HashMap::new();
        seen.insert(fid, true);
        let mut horizon = Vec::new();
        let mut i = 0;
        while i < visible.len() {
            let g = visible[i];
            i += 1;
            let [x, y, z] = bld.faces[g].v;
            for (u, v) in [(x, y), (y, z), (z, x)] {
                let Some(&h) = bld.edges.get(&(v, u)) else {
                    continue;
                };
                match seen.get(&h) {
                    Some(true) => {}
                    Some(false) => horizon.push((u, v)),
                    None => {
                        let vis = bld.faces[h].distance(&eye_p) > eps;
                        seen.insert(h, vis);
                        if vis {
                            visible.push(h);
                        } else {
                            horizon.push((u, v));
                        }
                    }
                }
            }
        }

        let mut orphans = Vec::new();
        for &g in &visible {
            orphans.extend(bld.faces[g].outside.drain(..).filter(|&p| p != eye));
            bld.kill_face(g);
        }
        let new_faces: Vec<usize> = horizon
            .iter()
            .map(|&(u, v)| bld.add_face(u, v, eye))
            .collect();
        bld.assign(&orphans, &new_faces);
        stack.extend(new_faces.iter().copied().filter(|&f| !bld.faces[f].outside.is_empty()));
    }

    let faces: Vec<[usize; 3]> = bld.faces.iter().filter(|f| f.alive).map(|f| f.v).collect();
    let mut vertices: Vec<usize> = faces.iter().flatten().copied().collect();
    vertices.sort_unstable();
    vertices.dedup();
    let origin = vertices.iter().map(|&v| points[v]).sum::<Vec3>() / vertices.len() as f64;
    let volume: f64 = faces
        .iter()
        .map(|&[x, y, z]| {
            let (p, q, r) = (points[x] - origin, points[y] - origin, points[z] - origin);
            p.dot(&q.cross(&r)) / 6.0
        })
        .sum();
    Ok(Some(ConvexHull {
        vertices,
        faces,
        volume: volume.max(0.0),
    }))
}

/// Volume of the convex hull; zero for flat or collinear inputs.
pub fn convex_hull_volume(points: &[Vec3]) -> Result<f64> {
    Ok(convex_hull(points)?.map_or(0.0, |h| h.volume))
}

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::hull::convex_hull_volume;
use crate::geometry::{apply_pose_weights, Pose6D, ShapeModel, Vec3, WeightVector};

/// Poses an object passed through, starting with its pre-manipulation pose.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Pose6D>", into = "Vec<Pose6D>")]
pub struct Trajectory(Vec<Pose6D>);

impl Trajectory {
    pub fn new(initial: Pose6D) -> Self {
        Self(vec![initial])
    }

    pub fn from_poses(poses: Vec<Pose6D>) -> Result<Self> {
        if poses.is_empty() {
            return Err(Error::EmptyInput("trajectory"));
        }
        Ok(Self(poses))
    }

    pub fn initial(&self) -> &Pose6D {
        &self.0[0]
    }

    pub fn last(&self) -> &Pose6D {
        self.0.last().expect("trajectory is never empty")
    }

    pub fn poses(&self) -> &[Pose6D] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Appends `pose` unless it equals the most recent entry.
    pub fn record(&mut self, pose: Pose6D) {
        if *self.last() != pose {
            self.0.push(pose);
        }
    }

    pub fn is_static(&self) -> bool {
        self.0.iter().all(|p| p == self.initial())
    }
}

impl TryFrom<Vec<Pose6D>> for Trajectory {
    type Error = Error;
    fn try_from(v: Vec<Pose6D>) -> Result<Self> {
        Trajectory::from_poses(v)
    }
}

impl From<Trajectory> for Vec<Pose6D> {
    fn from(t: Trajectory) -> Self {
        t.0
    }
}

fn cloud_at(shape: &ShapeModel, pose: &Pose6D, out: &mut Vec<Vec3>) {
    let rot = pose.rotation();
    let t = pose.translation();
    out.extend(shape.hull_points().iter().map(|p| rot * p + t));
}

/// Ratio of the hull of the shape swept over the weighted trajectory to the
/// hull of the shape at its initial pose.
pub fn swept_convex_volume(shape: &ShapeModel, traj: &Trajectory, w: &WeightVector) -> Result<f64> {
    let p0 = *traj.initial();
    let mut base = Vec::with_capacity(shape.hull_points().len());
    cloud_at(shape, &p0, &mut base);
    let v0 = convex_hull_volume(&base)?;
    if v0 <= 0.0 {
        return Err(Error::DegenerateShape);
    }

    let mut union = base;
    let mut last = p0;
    let mut moved = false;
    for pi in &traj.poses()[1..] {
        let pw = apply_pose_weights(&p0, pi, w);
        if pw == last {
            continue;
        }
        moved |= pw != p0;
        last = pw;
        cloud_at(shape, &pw, &mut union);
    }
    if !moved {
        return Ok(1.0);
    }
    let v = convex_hull_volume(&union)?;
    // the initial cloud is part of the union, so the ratio is at least 1 up to rounding
    Ok((v / v0).max(1.0))
}

/// Node cost: maximum swept convex volume over the passive objects, 1.0 for none.
pub fn max_weighted_scv<'a, I>(entries: I, w: &WeightVector) -> Result<f64>
where
    I: IntoIterator<Item = (&'a ShapeModel, &'a Trajectory)>,
{
    let mut best = 1.0f64;
    for (shape, traj) in entries {
        best = best.max(swept_convex_volume(shape, traj, w)?);
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cube() -> ShapeModel {
        ShapeModel::cuboid(1.0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn static_cube_is_baseline() {
        let t = Trajectory::new(Pose6D::new(0.3, 0.2, 0.5, 0.0, 0.0, 1.0));
        assert_eq!(swept_convex_volume(&cube(), &t, &WeightVector::default()).unwrap(), 1.0);
    }

    #[test]
    fn translated_cube_doubles() {
        let t = Trajectory::from_poses(vec![
            Pose6D::default(),
            Pose6D::new(1.0, 0.0, 0.0, 0.0, 0.0, 0.0),
        ])
        .unwrap();
        let v = swept_convex_volume(&cube(), &t, &WeightVector::ONES).unwrap();
        assert!((v - 2.0).abs() < 0.04, "{v}");
    }

    #[test]
    fn vertical_weight_stretches_drop() {
        let t = Trajectory::from_poses(vec![
            Pose6D::default(),
            Pose6D::new(0.0, 0.0, -0.5, 0.0, 0.0, 0.0),
        ])
        .unwrap();
        let weighted = swept_convex_volume(&cube(), &t, &WeightVector::default()).unwrap();
        let plain = swept_convex_volume(&cube(), &t, &WeightVector::ONES).unwrap();
        assert!((weighted - 2.0).abs() < 0.04, "{weighted}");
        assert!((plain - 1.5).abs() < 0.03, "{plain}");
    }

    #[test]
    fn max_over_passive_set() {
        let c = cube();
        let still = Trajectory::new(Pose6D::default());
        let half = Trajectory::from_poses(vec![
            Pose6D::default(),
            Pose6D::new(0.5, 0.0, 0.0, 0.0, 0.0, 0.0),
        ])
        .unwrap();
        let full = Trajectory::from_poses(vec![
            Pose6D::default(),
            Pose6D::new(0.0, 1.0, 0.0, 0.0, 0.0, 0.0),
        ])
        .unwrap();
        let w = WeightVector::ONES;
        let v = max_weighted_scv([(&c, &still), (&c, &half), (&c, &full)], &w).unwrap();
        assert!((v - 2.0).abs() < 1e-9);
        let statics = max_weighted_scv([(&c, &still), (&c, &still), (&c, &still)], &w).unwrap();
        assert_eq!(statics, 1.0);
        assert_eq!(max_weighted_scv(std::iter::empty(), &w).unwrap(), 1.0);
    }

    #[test]
    fn trajectory_must_be_non_empty() {
        assert!(Trajectory::from_poses(vec![]).is_err());
        assert!(serde_json::from_str::<Trajectory>("[]").is_err());
    }
}

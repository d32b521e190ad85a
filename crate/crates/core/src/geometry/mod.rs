//! Poses, primitive shapes, convex hulls and the swept-volume cost family.

mod convex;
mod hull;
mod pose;
mod shape;
mod swept;

pub use convex::{overlap_along, penetrating, separation, separation_bound, separation_within, Separation, Solid};
pub use hull::{convex_hull, convex_hull_volume, ConvexHull};
pub use pose::{apply_pose_weights, normalize_angle, Pose6D, Vec3, WeightVector};
pub use shape::{ShapeKind, ShapeModel, ShapeSpec, SURFACE_SAMPLES};
pub use swept::{max_weighted_scv, swept_convex_volume, Trajectory};

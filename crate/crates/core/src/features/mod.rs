//! Scene features: per-object and pairwise blocks, visibility densities and
//! spatial-preposition scores, assembled into one fixed-layout vector.

mod avs;
mod visibility;

use serde::{Deserialize, Serialize};

use crate::dynamics::{detect_contacts, ContactRecord};
use crate::error::{Error, Result};
use crate::geometry::separation;
use crate::scene::{ObjectInstance, Scene};

pub use avs::{avs_score, avs_scores, Preposition};
pub use visibility::{
    em_fit, fit_visibility_gmm, fit_visibility_model, visibility_corpus, visibility_ratio,
    visibility_ratio_from_cloud, GmmConfig, GmmEntry, VisibilityModel, MIN_GMM_SAMPLES, VARIANCE_FLOOR,
};

pub const OBJECT_FEATURES: usize = 23;
pub const PAIR_FEATURES: usize = 17;

pub fn feature_length(n: usize) -> usize {
    OBJECT_FEATURES * n + PAIR_FEATURES * (n * n.saturating_sub(1) / 2)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FeatureVector(pub Vec<f64>);

impl FeatureVector {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Distance from `o`'s surface to the nearest other surface.
fn free_space(scene: &Scene, o: &ObjectInstance) -> f64 {
    let a = o.solid();
    scene
        .objects
        .iter()
        .filter(|b| b.id != o.id)
        .map(|b| separation(&a, &b.solid()).distance().max(0.0))
        .fold(None, |m: Option<f64>, d| Some(m.map_or(d, |m| m.min(d))))
        // nothing to collide with: as open as the workspace gets
        .unwrap_or_else(|| scene.workspace.diagonal())
}

fn object_block(scene: &Scene, o: &ObjectInstance, vis: &VisibilityModel, out: &mut Vec<f64>) -> Result<()> {
    let ws = &scene.workspace;
    let c = o.centroid();
    out.extend(o.pose.to_array());
    out.extend([0.0, 0.0, ws.floor_z - c.z]);
    let mut back = [0.0; 3];
    let k = ws.depth_axis();
    back[k] = ws.face_coord(ws.back_face()) - c[k];
    out.extend(back);
    out.extend((scene.gripper_origin - c).iter().copied());
    let r = visibility_ratio(scene, o.id)?;
    out.push(vis.density(&o.class_label, r)?);
    let (lo, hi) = o.solid().aabb();
    out.extend((hi - lo).iter().copied());
    out.extend(o.shape.body_extents().iter().copied());
    out.push(free_space(scene, o));
    Ok(())
}

fn pair_block(scene: &Scene, a: &ObjectInstance, b: &ObjectInstance, contacts: &[ContactRecord], out: &mut Vec<f64>) -> Result<()> {
    let d = b.centroid() - a.centroid();
    out.extend(d.iter().copied());
    out.push(d.norm());
    let strongest = contacts
        .iter()
        .filter(|c| c.pair == (a.id, b.id))
        .max_by(|x, y| x.force.total_cmp(&y.force));
    match strongest {
        Some(c) => {
            out.extend(c.point);
            out.extend(c.normal);
            out.push(c.force);
        }
        None => out.extend([0.0; 7]),
    }
    out.extend(avs_scores(scene, a.id, b.id)?);
    Ok(())
}

/// Objects in ascending id order, each with its 23 features, then every pair
/// (i < j) with its 17.
pub fn assemble_feature_vector(scene: &Scene, vis: &VisibilityModel) -> Result<FeatureVector> {
    if scene.objects.is_empty() {
        return Err(Error::EmptyScene);
    }
    for o in &scene.objects {
        vis.entry(&o.class_label)?;
    }
    let mut objs: Vec<&ObjectInstance> = scene.objects.iter().collect();
    objs.sort_by_key(|o| o.id);
    let n = objs.len();
    let mut out = Vec::with_capacity(feature_length(n));
    for o in &objs {
        object_block(scene, o, vis, &mut out)?;
    }
    let contacts = detect_contacts(scene);
    for i in 0..n {
        for j in i + 1..n {
            pair_block(scene, objs[i], objs[j], &contacts, &mut out)?;
        }
    }
    debug_assert_eq!(out.len(), feature_length(n));
    if let Some(i) = out.iter().position(|v| !v.is_finite()) {
        return Err(Error::Format(format!("feature {i} is not finite")));
    }
    Ok(FeatureVector(out))
}

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use seqrank::features::{
    assemble_feature_vector, avs_scores, feature_length, fit_visibility_gmm, fit_visibility_model, visibility_ratio,
    GmmConfig, VisibilityModel,
};
use seqrank::geometry::{Pose6D, ShapeModel};
use seqrank::scene::{generate_scene, ObjectInstance, Scene, WorkspaceSpec, CATALOG};
use seqrank::Error;

fn draws(mean: f64, sd: f64, n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let d = Normal::new(mean, sd).unwrap();
    (0..n).map(|_| d.sample(rng)).collect()
}

fn cube(id: u32, x: f64, y: f64, z: f64, size: f64) -> ObjectInstance {
    ObjectInstance {
        id,
        class_label: "cube".into(),
        shape: ShapeModel::cuboid(size, size, size).unwrap(),
        pose: Pose6D::new(x, y, z, 0.0, 0.0, 0.0),
    }
}

fn quick_model(classes: &[String]) -> VisibilityModel {
    let cfg = GmmConfig {
        k_max: 3,
        restarts: 2,
        ..GmmConfig::default()
    };
    fit_visibility_model(classes, &WorkspaceSpec::container(), 30, &cfg).unwrap()
}

#[test]
fn bic_picks_the_generating_component_count() {
    let mut one = 0;
    let mut two = 0;
    for seed in 0..10 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cfg = GmmConfig {
            seed,
            ..GmmConfig::default()
        };
        if fit_visibility_gmm(&draws(0.6, 0.05, 1000, &mut rng), &cfg).unwrap().k == 1 {
            one += 1;
        }
        let mut bi = draws(0.3, 0.03, 500, &mut rng);
        bi.extend(draws(0.8, 0.03, 500, &mut rng));
        if fit_visibility_gmm(&bi, &cfg).unwrap().k == 2 {
            two += 1;
        }
    }
    assert!(one >= 9, "k=1 in {one}/10");
    assert!(two >= 9, "k=2 in {two}/10");
}

#[test]
fn growing_occluder_never_raises_visibility() {
    let target = cube(1, 0.3, 0.4, 0.05 + 5e-7, 0.1);
    let base = Scene::new(WorkspaceSpec::container(), vec![target.clone()], 0);
    let alone = visibility_ratio(&base, 1).unwrap();
    assert!(alone > 0.0 && alone < 1.0, "{alone}");
    let mut last = alone;
    for k in 1..=6 {
        let h = 0.04 * k as f64;
        // a slab between the target and the camera, growing upward
        let slab = ObjectInstance {
            id: 2,
            class_label: "slab".into(),
            shape: ShapeModel::cuboid(0.02, 0.3, h).unwrap(),
            pose: Pose6D::new(0.45, 0.4, h / 2.0 + 5e-7, 0.0, 0.0, 0.0),
        };
        let s = Scene::new(WorkspaceSpec::container(), vec![target.clone(), slab], 0);
        let r = visibility_ratio(&s, 1).unwrap();
        assert!(r <= last + 1e-12, "height {h}: {r} > {last}");
        last = r;
    }
    assert!(last < alone);
}

#[test]
fn vector_length_follows_object_count() {
    let ws = WorkspaceSpec::container();
    let all: Vec<String> = CATALOG.iter().take(6).map(|s| s.to_string()).collect();
    let vis = quick_model(&all);
    for n in 1..=6 {
        let s = generate_scene(&all[..n], &ws, n as u64).unwrap();
        let x = assemble_feature_vector(&s, &vis).unwrap();
        assert_eq!(x.len(), feature_length(n));
        assert!(x.as_slice().iter().all(|v| v.is_finite()));
    }
    assert_eq!(feature_length(4), 194);
}

#[test]
fn layout_ignores_insertion_order() {
    let ws = WorkspaceSpec::container();
    let classes: Vec<String> = ["carton", "can", "crate"].iter().map(|s| s.to_string()).collect();
    let vis = quick_model(&classes);
    let s = generate_scene(&classes, &ws, 5).unwrap();
    let mut shuffled = s.clone();
    shuffled.objects.reverse();
    assert_eq!(
        assemble_feature_vector(&s, &vis).unwrap(),
        assemble_feature_vector(&shuffled, &vis).unwrap()
    );
    let missing = quick_model(&classes[..1]);
    assert!(matches!(assemble_feature_vector(&s, &missing), Err(Error::UnknownClass(_))));
}

#[test]
fn opposite_prepositions_sum_to_one() {
    let ws = WorkspaceSpec::container();
    let classes: Vec<String> = ["carton", "can", "ball", "cube"].iter().map(|s| s.to_string()).collect();
    for seed in 0..5 {
        let s = generate_scene(&classes, &ws, seed).unwrap();
        for a in &s.objects {
            for b in &s.objects {
                if a.id == b.id {
                    continue;
                }
                let v = avs_scores(&s, a.id, b.id).unwrap();
                assert!(v.iter().all(|x| (0.0..=1.0).contains(x)));
                for k in [0, 2, 4] {
                    assert!((v[k] + v[k + 1] - 1.0).abs() < 1e-6);
                }
            }
        }
    }
}

use proptest::prelude::*;

use seqrank::features::{avs_scores, fit_visibility_gmm, GmmConfig};
use seqrank::geometry::{convex_hull_volume, swept_convex_volume, Pose6D, ShapeModel, Trajectory, Vec3, WeightVector};
use seqrank::scene::{ObjectInstance, Scene, WorkspaceSpec};

fn pose() -> impl Strategy<Value = Pose6D> {
    (
        -1.0f64..1.0,
        -1.0f64..1.0,
        -1.0f64..1.0,
        -3.0f64..3.0,
        -1.5f64..1.5,
        -3.0f64..3.0,
    )
        .prop_map(|(x, y, z, r, p, w)| Pose6D::new(x, y, z, r, p, w))
}

fn shape() -> impl Strategy<Value = ShapeModel> {
    prop_oneof![
        (0.05f64..0.5, 0.05f64..0.5, 0.05f64..0.5).prop_map(|(a, b, c)| ShapeModel::cuboid(a, b, c).unwrap()),
        (0.03f64..0.2, 0.05f64..0.4).prop_map(|(r, h)| ShapeModel::cylinder(r, h).unwrap()),
        (0.03f64..0.3).prop_map(|r| ShapeModel::sphere(r).unwrap()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn hull_volume_ignores_rigid_motion(pts in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0), 8..40), p in pose()) {
        let cloud: Vec<Vec3> = pts.iter().map(|&(x, y, z)| Vec3::new(x, y, z)).collect();
        let moved: Vec<Vec3> = cloud.iter().map(|q| p.transform_point(q)).collect();
        let a = convex_hull_volume(&cloud).unwrap();
        let b = convex_hull_volume(&moved).unwrap();
        prop_assert!((a - b).abs() <= 1e-9 * a.max(1.0));
    }

    #[test]
    fn swept_volume_is_at_least_one(s in shape(), poses in proptest::collection::vec(pose(), 1..5)) {
        let t = Trajectory::from_poses(poses).unwrap();
        let v = swept_convex_volume(&s, &t, &WeightVector::default()).unwrap();
        prop_assert!(v >= 1.0 - 1e-9);
        let start = Trajectory::new(*t.initial());
        prop_assert!((swept_convex_volume(&s, &start, &WeightVector::default()).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn swept_volume_grows_with_the_path(s in shape(), poses in proptest::collection::vec(pose(), 2..5), extra in pose()) {
        let t = Trajectory::from_poses(poses.clone()).unwrap();
        let mut longer = poses;
        longer.push(extra);
        let t2 = Trajectory::from_poses(longer).unwrap();
        let w = WeightVector::ONES;
        prop_assert!(swept_convex_volume(&s, &t2, &w).unwrap() >= swept_convex_volume(&s, &t, &w).unwrap() - 1e-9);
    }

    #[test]
    fn mixture_weights_sum_to_one(data in proptest::collection::vec(0.0f64..1.0, 20..120), seed in 0u64..50) {
        let cfg = GmmConfig { seed, restarts: 2, ..GmmConfig::default() };
        let g = fit_visibility_gmm(&data, &cfg).unwrap();
        prop_assert!((g.weights.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        prop_assert!(g.variances.iter().all(|v| *v > 0.0));
        prop_assert_eq!(g.n_samples, data.len());
    }

    #[test]
    fn spatial_opposites_are_complementary(dx in -0.3f64..0.3, dy in -0.3f64..0.3, dz in 0.0f64..0.3, yaw in -3.0f64..3.0) {
        let a = ObjectInstance {
            id: 1,
            class_label: "cube".into(),
            shape: ShapeModel::cuboid(0.1, 0.1, 0.1).unwrap(),
            pose: Pose6D::new(0.4, 0.4, 0.05, 0.0, 0.0, 0.0),
        };
        let b = ObjectInstance {
            id: 2,
            class_label: "carton".into(),
            shape: ShapeModel::cuboid(0.2, 0.1, 0.08).unwrap(),
            pose: Pose6D::new(0.4 + dx, 0.4 + dy, 0.05 + dz, 0.0, 0.0, yaw),
        };
        let s = Scene::new(WorkspaceSpec::container(), vec![a, b], 0);
        let v = avs_scores(&s, 1, 2).unwrap();
        for pair in v.chunks(2) {
            prop_assert!((pair[0] + pair[1] - 1.0).abs() < 1e-9, "{:?}", v);
        }
        prop_assert!(v.iter().all(|x| (0.0..=1.0).contains(x)));
    }
}

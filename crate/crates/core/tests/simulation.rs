use seqrank::dynamics::{compute_visible_cloud, detect_contacts, settle_scene, simulate_extraction, SimConfig};
use seqrank::geometry::{swept_convex_volume, Pose6D, ShapeModel, Vec3, WeightVector};
use seqrank::scene::{generate_scene, ObjectInstance, Scene, WorkspaceSpec, EPS_PEN};

const REST: f64 = 5e-7;

fn cube(id: u32, x: f64, y: f64, z: f64, size: f64) -> ObjectInstance {
    ObjectInstance {
        id,
        class_label: "cube".into(),
        shape: ShapeModel::cuboid(size, size, size).unwrap(),
        pose: Pose6D::new(x, y, z, 0.0, 0.0, 0.0),
    }
}

fn container(objects: Vec<ObjectInstance>) -> Scene {
    Scene::new(WorkspaceSpec::container(), objects, 0)
}

#[test]
fn removing_the_lower_box_drops_the_upper_one() {
    let s = container(vec![cube(1, 0.4, 0.4, 0.05 + REST, 0.1), cube(2, 0.4, 0.4, 0.15 + 2.0 * REST, 0.1)]);
    let out = simulate_extraction(&s, 1, &SimConfig::default()).unwrap();
    assert!(!out.flags.any(), "{:?}", out.flags);
    let traj = &out.trajectories[&2];
    let p0 = traj.initial().translation();
    let p1 = traj.last().translation();
    let drop = p0.z - p1.z;
    assert!((drop - 0.1).abs() < 1e-5, "drop {drop}");

    // the swept hull contains the vertical sweep of the cube over the drop
    let shape = &s.objects[1].shape;
    let plain = swept_convex_volume(shape, traj, &WeightVector::ONES).unwrap();
    assert!(plain >= 1.0 + drop / 0.1 - 0.02, "{plain}");
    let weighted = out.node_cost(&s, &WeightVector::default()).unwrap();
    assert!(weighted > plain);

    // the other order leaves the lower box untouched
    let top_first = simulate_extraction(&s, 2, &SimConfig::default()).unwrap();
    assert!(top_first.passives_static());
    assert_eq!(top_first.node_cost(&s, &WeightVector::default()).unwrap(), 1.0);
}

#[test]
fn blocking_object_is_pushed_aside() {
    // the gripper comes in from +x along y = 0.4 at the active's height
    let mut active = cube(1, 0.3, 0.4, 0.1 + REST, 0.2);
    active.pose.z = 0.1 + REST;
    let blocker = cube(2, 0.7, 0.41, 0.05 + REST, 0.1);
    let mut s = container(vec![active, blocker]);
    s.gripper_origin = Vec3::new(1.15, 0.4, 0.1);
    let out = simulate_extraction(&s, 1, &SimConfig::default()).unwrap();
    assert!(!out.flags.active_moved);
    let t = &out.trajectories[&2];
    assert!(t.len() > 1);
    let shift = t.last().translation() - t.initial().translation();
    assert!(shift.y.abs() > 0.05, "{shift:?}");
    assert!(out.final_scene.check().max_penetration <= EPS_PEN);
}

#[test]
fn ball_on_a_box_at_the_door_falls_out() {
    let ball = ObjectInstance {
        id: 2,
        class_label: "ball".into(),
        shape: ShapeModel::sphere(0.06).unwrap(),
        pose: Pose6D::new(0.88, 0.4, 0.16 + 2.0 * REST, 0.0, 0.0, 0.0),
    };
    let mut s = container(vec![cube(1, 0.9, 0.4, 0.05 + REST, 0.1), ball]);
    // straight in at box height so the gripper passes under the ball
    s.gripper_origin = Vec3::new(1.15, 0.4, 0.05);
    assert_eq!(settle_scene(&s).unwrap().objects.len(), 2);
    let out = simulate_extraction(&s, 1, &SimConfig::default()).unwrap();
    assert!(out.flags.out_of_workspace.contains(&2), "{:?}", out.flags);
    assert!(out.final_scene.objects.is_empty());
}

#[test]
fn inventory_is_conserved() {
    let ws = WorkspaceSpec::container();
    let classes: Vec<String> = ["carton", "can", "ball", "cube"].iter().map(|s| s.to_string()).collect();
    for seed in 0..5 {
        let s = generate_scene(&classes, &ws, seed).unwrap();
        for o in &s.objects {
            let out = simulate_extraction(&s, o.id, &SimConfig::default()).unwrap();
            let mut ids: Vec<u32> = out.final_scene.ids();
            ids.push(o.id);
            ids.extend(out.flags.out_of_workspace.iter().copied());
            ids.sort();
            ids.dedup();
            assert_eq!(ids, s.sorted_ids());
            for (id, t) in &out.trajectories {
                assert_eq!(*t.initial(), s.object(*id).unwrap().pose);
            }
            assert!(out.final_scene.check().max_penetration <= EPS_PEN);
            let again = simulate_extraction(&s, o.id, &SimConfig::default()).unwrap();
            assert_eq!(again.trajectories, out.trajectories);
            assert_eq!(again.final_scene, out.final_scene);
        }
    }
}

#[test]
fn lone_cube_shows_about_half_its_samples() {
    // off-center so the camera sees three faces
    let s = container(vec![cube(1, 0.5, 0.15, 0.05 + REST, 0.1)]);
    let n = compute_visible_cloud(&s, 1).unwrap().len();
    assert!((175..=325).contains(&n), "{n}");
    assert_eq!(compute_visible_cloud(&s, 1).unwrap().len(), n);
}

#[test]
fn generated_scenes_have_contacts() {
    let ws = WorkspaceSpec::container();
    let classes: Vec<String> = ["carton", "crate", "can", "cube"].iter().map(|s| s.to_string()).collect();
    let with_contact = (0..50)
        .filter(|&seed| !detect_contacts(&generate_scene(&classes, &ws, seed).unwrap()).is_empty())
        .count();
    assert!(with_contact >= 1);
}


#![allow(dead_code)]

use rand::rngs::StdRng;
use rand::Rng;
use sensecov::mtl::TimeInterval;
use sensecov::quality::CoverageTimeline;
use sensecov::{Scene, SkillDef};
use serde_json::{json, Value};

/// Shape of a generated scene.
#[derive(Clone, Copy, Debug)]
pub struct SceneShape {
    pub cameras: usize,
    /// Box sets watched by the skill: the grasped object plus markers.
    pub targets: usize,
    pub moving_occluders: usize,
}

impl SceneShape {
    pub fn random(rng: &mut StdRng) -> Self {
        SceneShape {
            cameras: rng.gen_range(2..=6),
            targets: rng.gen_range(1..=4),
            moving_occluders: rng.gen_range(0..=3),
        }
    }
}

fn v3(rng: &mut StdRng, lo: [f64; 3], hi: [f64; 3]) -> [f64; 3] {
    [0, 1, 2].map(|i| rng.gen_range(lo[i]..hi[i]))
}

fn camera(rng: &mut StdRng, i: usize, aim: [f64; 3]) -> Value {
    let jitter = v3(rng, [-0.15, -0.15, 0.0], [0.15, 0.15, 0.2]);
    let target = [0, 1, 2].map(|k| aim[k] + jitter[k]);
    let yaw: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    let elev: f64 = rng.gen_range(0.15..1.3);
    let r: f64 = rng.gen_range(0.7..1.5);
    let pos = [
        target[0] + r * elev.cos() * yaw.cos(),
        target[1] + r * elev.cos() * yaw.sin(),
        target[2] + r * elev.sin(),
    ];
    json!({
        "name": format!("cam{i}"),
        "extrinsic": {"position": pos, "look_at": target, "up": [0, 0, 1]},
        "hfov": rng.gen_range(0.25..0.8),
        "vfov": rng.gen_range(0.2..0.6),
        "near": 0.05,
        "far": 3.0,
    })
}

/// A random pickup scene and matching skill. The skill watches `obj` and
/// `targets - 1` static markers; moving occluders are capsules attached to
/// user frames that drift linearly across the workspace.
pub fn random_scene(rng: &mut StdRng, shape: SceneShape) -> (Scene, SkillDef) {
    let mut objects = vec![json!({
        "name": "obj",
        "pose": {"position": v3(rng, [0.3, -0.3, 0.02], [0.55, 0.3, 0.0201])},
        "extent": [0.02, 0.02, 0.02],
        "graspable": true,
        "facts": ["on_table(obj)"],
    })];
    let markers: Vec<String> = (1..shape.targets).map(|i| format!("m{i}")).collect();
    for m in &markers {
        objects.push(json!({
            "name": m,
            "pose": {"position": v3(rng, [0.15, -0.45, 0.01], [0.7, 0.45, 0.04])},
            "extent": [0.03, 0.03, 0.03],
            "facts": [format!("on_table({m})")],
        }));
    }
    let aims: Vec<[f64; 3]> = objects
        .iter()
        .map(|o| serde_json::from_value(o["pose"]["position"].clone()).unwrap())
        .collect();
    let cameras: Vec<Value> = (0..shape.cameras)
        .map(|i| {
            let aim = aims[rng.gen_range(0..aims.len())];
            camera(rng, i, aim)
        })
        .collect();
    let mut frames = Vec::new();
    let mut links = vec![
        json!({"frame": "upper_arm", "capsule": {"a": [0, 0, 0], "b": [0.35, 0, 0], "radius": 0.04}}),
        json!({"frame": "forearm", "capsule": {"a": [0, 0, 0], "b": [0.24, 0, 0], "radius": 0.03}}),
    ];
    for i in 0..shape.moving_occluders {
        let name = format!("occ{i}");
        let a = v3(rng, [0.0, -0.6, 0.05], [0.8, 0.6, 0.4]);
        let b = v3(rng, [0.0, -0.6, 0.05], [0.8, 0.6, 0.4]);
        frames.push(json!({
            "name": name,
            "samples": [
                {"t": 0.0, "pose": {"position": a}},
                {"t": 120.0, "pose": {"position": b}},
            ],
        }));
        let len: f64 = rng.gen_range(0.1..0.35);
        links.push(json!({
            "frame": name,
            "capsule": {"a": [0, 0, 0], "b": [0, len, 0], "radius": rng.gen_range(0.02..0.06)},
        }));
    }
    let scene = json!({
        "cameras": cameras,
        "objects": objects,
        "frames": frames,
        "robot": {
            "base": {"position": [0, 0, 0]},
            "shoulder_height": 0.2,
            "upper_arm": 0.35,
            "forearm": 0.35,
            "reach": [0.1, 0.75],
            "home": [0.25, 0.0, 0.35],
            "profile": {"kind": "s-curve", "vmax": 0.1, "amax": 0.2, "jmax": 1.0},
            "dwell": 0.5,
            "links": links,
            "facts": ["gripper_empty"],
        },
    });
    let mut requirements = vec![
        "G[a1.ts,a2.te](!hold(?obj) & on_table(?obj)) & G[a4.ts,a5.te](hold(?obj) & !on_table(?obj))".to_string(),
        "F[a4.ts,a4.te](!hold(?obj) & on_table(?obj))".to_string(),
    ];
    let mut box_sets = json!({"object": {"boxes": [{"frame": "?obj"}]}});
    let mut bindings = json!({"hold(?obj)": "object", "on_table(?obj)": "object"});
    for m in &markers {
        requirements.push(format!("G[a1.ts,a5.te](on_table({m}))"));
        box_sets[m] = json!({"boxes": [{"frame": m}]});
        bindings[format!("on_table({m})")] = json!(m);
    }
    let skill = json!({
        "name": "pickup",
        "params": [{"name": "?obj", "type": "graspable"}],
        "pre": ["on_table(?obj)", "gripper_empty"],
        "post": ["hold(?obj)", "!on_table(?obj)", "!gripper_empty"],
        "actions": [
            {"name": "a1", "motion": {"move_to": {"target": "?obj", "offset": [0, 0, 0.06]}}},
            {"name": "a2", "motion": {"move_by": [0, 0, -0.04]}},
            {"name": "a3", "motion": {"grasp": "?obj"}, "effects": ["hold(?obj)", "!on_table(?obj)"]},
            {"name": "a4", "motion": {"move_by": [0, 0, 0.12]}},
            {"name": "a5", "motion": "home"},
        ],
        "requirements": requirements,
        "box_sets": box_sets,
        "bindings": bindings,
    });
    let scene = Scene::from_json(&scene.to_string()).expect("generated scene is valid");
    let skill = SkillDef::from_json(&skill.to_string()).expect("generated skill is valid");
    (scene, skill)
}

/// Integral of the covered indicator over `[lo, hi]` by the trapezoid rule
/// on the timeline's samples.
pub fn covered_time(tl: &CoverageTimeline, lo: f64, hi: f64) -> f64 {
    let pts: Vec<(f64, f64)> = tl
        .samples
        .iter()
        .filter(|s| s.t >= lo - 1e-9 && s.t <= hi + 1e-9)
        .map(|s| (s.t, if s.covered { 1.0 } else { 0.0 }))
        .collect();
    pts.windows(2).map(|w| (w[1].0 - w[0].0) * (w[0].1 + w[1].1) / 2.0).sum()
}

/// Dense-resampling estimates of `(Q_avg, Q_eoi)`.
pub fn oracle_quality(tl: &CoverageTimeline, t0: f64, t1: f64, eoi: &[TimeInterval]) -> (f64, Option<f64>) {
    let avg = covered_time(tl, t0, t1) / (t1 - t0);
    let len: f64 = eoi.iter().map(|i| i.hi - i.lo).sum();
    let eoi = (len > 0.0).then(|| eoi.iter().map(|i| covered_time(tl, i.lo, i.hi)).sum::<f64>() / len);
    (avg, eoi)
}

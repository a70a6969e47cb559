//! Bundled reference scenes, skills and fault scenarios.
//!
//! `pickup`: six cameras, green cubes g1..g6 (g6 out of reach) and a
//! pickup skill that carries the cube to a staging point. g1 sits in a
//! blind corner; its approach is only seen near home, a short window that
//! coarse sampling misses.
//!
//! `red`: two screws mirrored about the robot's x axis. red1 is watched by
//! two side cameras; red2 only from overhead, where the gripper body hides
//! it from the grasp until the arm swings away.

use crate::error::{Error, Result};
use crate::grounding::RobotStart;
use crate::monitor::Scenario;
use crate::session::CreateRequest;
use crate::skill::{SkillDef, SkillDoc};
use crate::world::Scene;

pub const SIM_PICKUP_SCENE: &str = include_str!("../data/sim_pickup_scene.json");
pub const PICKUP_SKILL: &str = include_str!("../data/pickup_skill.json");
pub const DROP_SKILL: &str = include_str!("../data/drop_skill.json");
pub const RED_SCENE: &str = include_str!("../data/red_scene.json");
pub const RED_PICKUP_SKILL: &str = include_str!("../data/red_pickup_skill.json");
pub const SLIP_RED1: &str = include_str!("../data/slip_red1.json");
pub const SLIP_RED2: &str = include_str!("../data/slip_red2.json");

/// Names accepted by [`create_request`].
pub const NAMES: [&str; 2] = ["pickup", "red"];

pub fn sim_pickup_scene() -> Scene {
    Scene::from_json(SIM_PICKUP_SCENE).expect("bundled scene is valid")
}

pub fn pickup_skill() -> SkillDef {
    SkillDef::from_json(PICKUP_SKILL).expect("bundled skill is valid")
}

pub fn drop_skill() -> SkillDef {
    SkillDef::from_json(DROP_SKILL).expect("bundled skill is valid")
}

pub fn red_scene() -> Scene {
    Scene::from_json(RED_SCENE).expect("bundled scene is valid")
}

pub fn red_pickup_skill() -> SkillDef {
    SkillDef::from_json(RED_PICKUP_SKILL).expect("bundled skill is valid")
}

/// Slip during a4 followed by a retry, for `red1` or `red2`.
pub fn slip_scenario(parameter: &str) -> Result<Scenario> {
    match parameter {
        "red1" => Scenario::from_json(SLIP_RED1),
        "red2" => Scenario::from_json(SLIP_RED2),
        other => Err(Error::validation(format!("no bundled slip scenario for `{other}`"))),
    }
}

/// Session creation document for a bundled setup.
pub fn create_request(name: &str, id: Option<String>) -> Result<CreateRequest> {
    let (scene, skills): (Scene, Vec<SkillDoc>) = match name {
        "pickup" => (
            sim_pickup_scene(),
            vec![pickup_skill().doc().clone(), drop_skill().doc().clone()],
        ),
        "red" => (red_scene(), vec![red_pickup_skill().doc().clone()]),
        other => {
            return Err(Error::validation(format!(
                "unknown reference `{other}` (expected one of {})",
                NAMES.join(", ")
            )))
        }
    };
    Ok(CreateRequest {
        id,
        scene,
        skills,
        world: None,
        robot: RobotStart::default(),
    })
}

//! Skill grounding: binds a skill to one parameter, times every primitive
//! action with the robot's motion profile, samples the trajectory and
//! resolves symbolic interval endpoints to seconds.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::coverage::BoundingBoxSet;
use crate::error::{Error, Result};
use crate::geometry::Pose;
use crate::mtl::{extract_propositions, Endpoint, Formula, GroundFormula, TimeInterval, TimePoint};
use crate::planner::within_reach;
use crate::profile::{time_parameterize, MotionProfile};
use crate::skill::{Motion, SkillDef};
use crate::world::{Atom, FrameView, Literal, Scene, EE_FRAME};

/// Times shared by adjacent actions, or merged from different sources,
/// are considered equal within this tolerance.
pub const TIME_EPS: f64 = 1e-9;

/// How sample times are chosen along the trajectory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sampling {
    /// `min_n` evenly spaced samples per action, both boundaries included.
    Uniform { min_n: usize },
    /// A grid every `dt` seconds from the skill start, plus every boundary.
    FixedInterval { dt: f64 },
    /// Offsets in seconds from the skill start, plus every boundary.
    Explicit { times: Vec<f64> },
}

impl Sampling {
    pub fn uniform(min_n: usize) -> Self {
        Sampling::Uniform { min_n }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Sampling::Uniform { min_n } if *min_n == 0 => {
                Err(Error::validation("min_n must be at least 1"))
            }
            Sampling::FixedInterval { dt } if !(dt.is_finite() && *dt > 0.0) => {
                Err(Error::validation("sampling interval must be positive"))
            }
            Sampling::Explicit { times } if times.iter().any(|t| !t.is_finite()) => {
                Err(Error::validation("sample times must be finite"))
            }
            _ => Ok(()),
        }
    }
}

/// Where the robot is when a skill begins.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RobotStart {
    /// End-effector position; `None` means the robot's home.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ee: Option<[f64; 3]>,
    /// Objects carried by the end effector, with their pose relative to it.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub attached: BTreeMap<String, Pose>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroundedAction {
    pub name: String,
    pub t_s: f64,
    pub t_e: f64,
    pub from: [f64; 3],
    pub to: [f64; 3],
    /// Ground literals applied at `t_e`.
    pub effects: Vec<Literal>,
}

/// An object carried by the end effector from `from` until `until`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Attachment {
    pub object: String,
    pub relative: Pose,
    pub from: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub until: Option<f64>,
}

/// A requirement formula with its intervals in seconds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroundRequirement {
    pub text: String,
    pub formula: GroundFormula,
}

/// A skill bound to one parameter with all times resolved.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroundedSkill {
    pub skill: String,
    pub parameter: String,
    pub binding: BTreeMap<String, String>,
    pub actions: Vec<GroundedAction>,
    pub requirements: Vec<GroundRequirement>,
    /// Event-of-interest intervals (every eventually node), in order.
    pub eoi: Vec<TimeInterval>,
    pub profile: MotionProfile,
    pub attachments: Vec<Attachment>,
    /// Resolved target box set for every ground atom of the requirements.
    #[serde(skip)]
    pub targets: BTreeMap<Atom, BoundingBoxSet>,
    /// Box set id per ground atom (serialisable mirror of `targets`).
    pub target_ids: BTreeMap<Atom, String>,
}

impl GroundedSkill {
    pub fn t_start(&self) -> f64 {
        self.actions[0].t_s
    }

    pub fn t_end(&self) -> f64 {
        self.actions[self.actions.len() - 1].t_e
    }

    /// Total execution time `T^p`.
    pub fn total_time(&self) -> f64 {
        self.t_end() - self.t_start()
    }

    /// Sum of the event-of-interest interval lengths, duplicates kept.
    pub fn t_eoi(&self) -> f64 {
        self.eoi.iter().map(TimeInterval::length).sum()
    }

    pub fn boundaries(&self) -> Vec<f64> {
        std::iter::once(self.t_start())
            .chain(self.actions.iter().map(|a| a.t_e))
            .collect()
    }

    /// Index of the action executing at `t`; a shared boundary belongs to
    /// the later action.
    pub fn action_at(&self, t: f64) -> usize {
        self.actions
            .iter()
            .position(|a| t < a.t_e - TIME_EPS)
            .unwrap_or(self.actions.len() - 1)
    }

    /// End-effector position at `t` (clamped to the skill's horizon).
    pub fn ee_at(&self, t: f64) -> Vector3<f64> {
        let t = t.clamp(self.t_start(), self.t_end());
        let a = &self.actions[self.action_at(t)];
        let (from, to) = (Vector3::from(a.from), Vector3::from(a.to));
        let length = (to - from).norm();
        if length < 1e-12 {
            return to;
        }
        let s = self
            .profile
            .plan(length)
            .map(|p| p.progress_at(t - a.t_s))
            .unwrap_or(1.0);
        from + (to - from) * s
    }

    /// World poses of the robot frames and of every moved object at `t`.
    pub fn frames_at(&self, scene: &Scene, t: f64) -> BTreeMap<String, Pose> {
        let mut frames = scene.robot.frame_poses(&self.ee_at(t));
        let ee = frames[EE_FRAME];
        for att in &self.attachments {
            if t < att.from - TIME_EPS {
                continue;
            }
            let carrier = match att.until {
                Some(u) if t >= u - TIME_EPS => Pose::new(self.ee_at(u), ee.orientation()),
                _ => ee,
            };
            frames.insert(att.object.clone(), carrier.compose(&att.relative));
        }
        frames
    }

    /// Robot state after the last action.
    pub fn end_state(&self) -> RobotStart {
        let end = self.t_end();
        RobotStart {
            ee: Some(self.ee_at(end).into()),
            attached: self
                .attachments
                .iter()
                .filter(|a| a.until.is_none())
                .map(|a| (a.object.clone(), a.relative))
                .collect(),
        }
    }

    /// World poses of objects moved by the skill, at its end.
    pub fn final_object_poses(&self, scene: &Scene) -> BTreeMap<String, Pose> {
        let frames = self.frames_at(scene, self.t_end());
        self.attachments
            .iter()
            .map(|a| (a.object.clone(), frames[&a.object]))
            .collect()
    }

    /// Ground literals applied by each action, with their time.
    pub fn effect_events(&self) -> Vec<(f64, &[Literal])> {
        self.actions
            .iter()
            .filter(|a| !a.effects.is_empty())
            .map(|a| (a.t_e, a.effects.as_slice()))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    pub t: f64,
    pub action: usize,
    /// Arm joints `[yaw, pitch, elbow]` in radians.
    pub joints: [f64; 3],
    pub ee: [f64; 3],
    /// World poses of robot frames and moved objects.
    pub frames: BTreeMap<String, Pose>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub samples: Vec<TrajectorySample>,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("trajectory serialises")
    }

    /// Loads an externally produced trajectory; sample times must be
    /// strictly increasing.
    pub fn from_json(text: &str) -> Result<Self> {
        let traj: Trajectory = serde_json::from_str(text)?;
        if traj.samples.is_empty() {
            return Err(Error::validation("trajectory has no samples"));
        }
        if traj.samples.windows(2).any(|w| !(w[1].t > w[0].t)) {
            return Err(Error::validation("trajectory times must be strictly increasing"));
        }
        Ok(traj)
    }

    /// Builds samples at `times` from the analytic motion of `g`.
    pub fn from_grounding(g: &GroundedSkill, scene: &Scene, times: &[f64]) -> Self {
        let samples = times
            .iter()
            .map(|&t| {
                let ee = g.ee_at(t);
                TrajectorySample {
                    t,
                    action: g.action_at(t),
                    joints: scene.robot.arm_pose(&ee).joints,
                    ee: ee.into(),
                    frames: g.frames_at(scene, t),
                }
            })
            .collect();
        Trajectory { samples }
    }
}

/// Grounding inputs beyond the skill, parameter and scene.
#[derive(Clone, Debug, PartialEq)]
pub struct GroundingOptions {
    pub sampling: Sampling,
    /// Absolute time of the first action's start.
    pub start_time: f64,
    pub start: RobotStart,
}

impl Default for GroundingOptions {
    fn default() -> Self {
        GroundingOptions {
            sampling: Sampling::Uniform { min_n: 10 },
            start_time: 0.0,
            start: RobotStart::default(),
        }
    }
}

impl GroundingOptions {
    pub fn uniform(min_n: usize) -> Self {
        GroundingOptions {
            sampling: Sampling::uniform(min_n),
            ..Default::default()
        }
    }
}

/// Grounds `skill` for parameter `p`, timing each action with the scene
/// robot's motion profile.
pub fn ground_skill(
    skill: &SkillDef,
    p: &str,
    scene: &Scene,
    opts: &GroundingOptions,
) -> Result<(GroundedSkill, Trajectory)> {
    let binding = skill.bind(p)?;
    ground_with_binding(skill, binding, p, scene, opts)
}

pub fn ground_with_binding(
    skill: &SkillDef,
    binding: BTreeMap<String, String>,
    parameter: &str,
    scene: &Scene,
    opts: &GroundingOptions,
) -> Result<(GroundedSkill, Trajectory)> {
    opts.sampling.validate()?;
    if !(opts.start_time.is_finite() && opts.start_time >= 0.0) {
        return Err(Error::validation("start time must be finite and non-negative"));
    }
    let robot = &scene.robot;
    let subst = |name: &str| binding.get(name).cloned().unwrap_or_else(|| name.to_string());

    let mut ee = opts.start.ee.map(Vector3::from).unwrap_or_else(|| robot.home());
    let mut attachments: Vec<Attachment> = opts
        .start
        .attached
        .iter()
        .map(|(o, rel)| Attachment {
            object: o.clone(),
            relative: *rel,
            from: opts.start_time,
            until: None,
        })
        .collect();
    let mut t = opts.start_time;
    let mut actions = Vec::with_capacity(skill.actions().len());

    for action in skill.actions() {
        let fail = |message: String| Error::Grounding {
            action: action.name.clone(),
            message,
        };
        let overrides = current_overrides(scene, &ee, &attachments, t);
        let view = FrameView::new(scene, t, &overrides);
        let (target, duration) = match &action.motion {
            Motion::MoveTo { target, offset } => {
                let frame = subst(target);
                let pose = view.world_pose(&frame).map_err(|e| fail(e.to_string()))?;
                (pose.position() + Vector3::from(*offset), None)
            }
            Motion::MoveToPoint(p) => (Vector3::from(*p), None),
            Motion::MoveBy(d) => (ee + Vector3::from(*d), None),
            Motion::Home => (robot.home(), None),
            Motion::Grasp(obj) => {
                let obj = subst(obj);
                if attachments.iter().any(|a| a.object == obj && a.until.is_none()) {
                    return Err(fail(format!("`{obj}` is already held")));
                }
                let pose = view.world_pose(&obj).map_err(|e| fail(e.to_string()))?;
                if scene.object(&obj).is_none() {
                    return Err(fail(format!("`{obj}` is not an object")));
                }
                let ee_pose = Pose::new(ee, robot.base.orientation());
                attachments.push(Attachment {
                    object: obj,
                    relative: ee_pose.inverse().compose(&pose),
                    from: f64::NAN,
                    until: None,
                });
                (ee, Some(robot.dwell))
            }
            Motion::Release(obj) => {
                let obj = subst(obj);
                if !attachments.iter().any(|a| a.object == obj && a.until.is_none()) {
                    return Err(fail(format!("`{obj}` is not held")));
                }
                (ee, Some(robot.dwell))
            }
            Motion::Dwell(d) => (ee, Some(*d)),
        };
        if !within_reach(robot, &target) {
            return Err(fail(format!(
                "waypoint ({:.3}, {:.3}, {:.3}) is outside the reachable shell",
                target.x, target.y, target.z
            )));
        }
        let duration = match duration {
            Some(d) => d,
            None => time_parameterize(&[ee, target], &robot.profile, robot.dwell)
                .map_err(|e| fail(e.to_string()))?,
        };
        if !(duration > 0.0) {
            return Err(fail("action duration must be positive".into()));
        }
        let t_e = t + duration;
        match &action.motion {
            Motion::Grasp(_) => {
                attachments.last_mut().expect("pushed above").from = t_e;
            }
            Motion::Release(obj) => {
                let obj = subst(obj);
                let att = attachments
                    .iter_mut()
                    .find(|a| a.object == obj && a.until.is_none())
                    .expect("checked above");
                att.until = Some(t_e);
            }
            _ => {}
        }
        actions.push(GroundedAction {
            name: action.name.clone(),
            t_s: t,
            t_e,
            from: ee.into(),
            to: target.into(),
            effects: action.effects.iter().map(|l| l.substitute(&binding)).collect(),
        });
        ee = target;
        t = t_e;
    }

    let resolve = |tp: &TimePoint| -> Result<f64> {
        match tp {
            TimePoint::Seconds(s) => Ok(opts.start_time + s),
            TimePoint::Action { action, endpoint } => {
                let a = actions
                    .iter()
                    .find(|a| &a.name == action)
                    .ok_or_else(|| Error::UnknownActionLabel(action.clone()))?;
                Ok(match endpoint {
                    Endpoint::Start => a.t_s,
                    Endpoint::End => a.t_e,
                })
            }
        }
    };
    let mut requirements = Vec::new();
    for (text, f) in skill.requirement_texts().iter().zip(skill.formulas()) {
        let grounded: GroundFormula = f.try_map_intervals(&mut |i| {
            let (lo, hi) = (resolve(&i.lo)?, resolve(&i.hi)?);
            if lo > hi + TIME_EPS {
                return Err(Error::validation(format!(
                    "interval {i} grounds to [{lo}, {hi}] with lower bound after upper"
                )));
            }
            Ok(TimeInterval::new(lo, hi.max(lo)))
        })?;
        requirements.push(GroundRequirement {
            text: text.clone(),
            formula: grounded.map_atoms(&|a| a.substitute(&binding)),
        });
    }
    let eoi = requirements
        .iter()
        .flat_map(|r| crate::mtl::extract_eoi_intervals(&r.formula))
        .collect();

    let mut targets = BTreeMap::new();
    let mut target_ids = BTreeMap::new();
    for f in skill.formulas() {
        for pattern in extract_propositions(f) {
            let id = skill
                .binding(&pattern)
                .ok_or_else(|| Error::validation(format!("proposition `{pattern}` has no binding")))?;
            let ground = pattern.substitute(&binding);
            if !ground.is_ground() {
                return Err(Error::validation(format!("proposition `{ground}` is not ground")));
            }
            targets.insert(ground.clone(), skill.box_set(id, &binding, scene)?);
            target_ids.insert(ground, id.to_string());
        }
    }

    let g = GroundedSkill {
        skill: skill.name().to_string(),
        parameter: parameter.to_string(),
        binding,
        actions,
        requirements,
        eoi,
        profile: robot.profile,
        attachments,
        targets,
        target_ids,
    };
    let times = sample_times(&g, &opts.sampling);
    let traj = Trajectory::from_grounding(&g, scene, &times);
    Ok((g, traj))
}

/// Re-resolves the box sets of a deserialised grounding.
pub fn attach_targets(g: &mut GroundedSkill, skill: &SkillDef, scene: &Scene) -> Result<()> {
    g.targets = g
        .target_ids
        .iter()
        .map(|(a, id)| Ok((a.clone(), skill.box_set(id, &g.binding, scene)?)))
        .collect::<Result<_>>()?;
    Ok(())
}

fn current_overrides(
    scene: &Scene,
    ee: &Vector3<f64>,
    attachments: &[Attachment],
    t: f64,
) -> BTreeMap<String, Pose> {
    let mut frames = scene.robot.frame_poses(ee);
    let ee_pose = frames[EE_FRAME];
    for a in attachments {
        if a.until.is_none() && !(a.from > t + TIME_EPS) {
            frames.insert(a.object.clone(), ee_pose.compose(&a.relative));
        }
    }
    frames
}

/// Sample times for `g` under `sampling`; always contains every boundary.
pub fn sample_times(g: &GroundedSkill, sampling: &Sampling) -> Vec<f64> {
    let (t0, t1) = (g.t_start(), g.t_end());
    let mut times: Vec<f64> = g.boundaries();
    match sampling {
        Sampling::Uniform { min_n } => {
            let n = (*min_n).max(2);
            for a in &g.actions {
                for i in 1..n - 1 {
                    times.push(a.t_s + (a.t_e - a.t_s) * i as f64 / (n - 1) as f64);
                }
            }
        }
        Sampling::FixedInterval { dt } => {
            let mut k = 1usize;
            loop {
                let t = t0 + k as f64 * dt;
                if t > t1 {
                    break;
                }
                times.push(t);
                k += 1;
            }
        }
        Sampling::Explicit { times: extra } => {
            times.extend(extra.iter().map(|s| t0 + s).filter(|t| *t >= t0 && *t <= t1));
        }
    }
    merge_times(times)
}

/// Sorts and merges times closer than [`TIME_EPS`], keeping the first.
pub fn merge_times(mut times: Vec<f64>) -> Vec<f64> {
    times.sort_by(f64::total_cmp);
    let mut out: Vec<f64> = Vec::with_capacity(times.len());
    for t in times {
        match out.last() {
            Some(last) if t - last <= TIME_EPS => {}
            _ => out.push(t),
        }
    }
    out
}

/// One ground literal that must be observable at a sample, with the id
/// of its target box set.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct StateLiteral {
    pub atom: Atom,
    pub target: String,
}

/// The skill state at one sample: every atom that must be sensed there.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SkillState {
    pub t: f64,
    pub literals: Vec<StateLiteral>,
}

/// Skill states at every trajectory sample. An atom is in the state at
/// `t` when a temporal operator whose interval contains `t` mentions it;
/// atoms outside any temporal operator belong to the first sample.
pub fn sample_skill_states(g: &GroundedSkill, traj: &Trajectory) -> Vec<SkillState> {
    let mut windows: Vec<(TimeInterval, BTreeSet<Atom>)> = Vec::new();
    let mut immediate: BTreeSet<Atom> = BTreeSet::new();
    for r in &g.requirements {
        for (i, body, _) in r.formula.temporal_nodes() {
            windows.push((*i, extract_propositions(body)));
        }
        collect_untimed(&r.formula, &mut immediate);
    }
    traj.samples
        .iter()
        .enumerate()
        .map(|(j, s)| {
            let mut atoms: BTreeSet<&Atom> = windows
                .iter()
                .filter(|(i, _)| i.lo - TIME_EPS <= s.t && s.t <= i.hi + TIME_EPS)
                .flat_map(|(_, set)| set)
                .collect();
            if j == 0 {
                atoms.extend(&immediate);
            }
            SkillState {
                t: s.t,
                literals: atoms
                    .into_iter()
                    .map(|a| StateLiteral {
                        atom: a.clone(),
                        target: g.target_ids.get(a).cloned().unwrap_or_default(),
                    })
                    .collect(),
            }
        })
        .collect()
}

fn collect_untimed(f: &GroundFormula, out: &mut BTreeSet<Atom>) {
    match f {
        Formula::Atom(a) => {
            out.insert(a.clone());
        }
        Formula::Not(x) => collect_untimed(x, out),
        Formula::And(l, r) => {
            collect_untimed(l, out);
            collect_untimed(r, out);
        }
        Formula::Always(..) | Formula::Eventually(..) => {}
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::profile::MotionProfile;

    pub(crate) fn desk_scene() -> Scene {
        Scene::from_json(
            r#"{
              "cameras": [{"name": "top", "extrinsic": {"position": [0.4, 0, 1.5], "look_at": [0.4, 0, 0], "up": [1, 0, 0]},
                           "hfov": 1.2, "vfov": 1.0, "near": 0.1, "far": 3.0}],
              "objects": [
                {"name": "cube", "category": ["green", "cube"], "pose": {"position": [0.4, 0.1, 0.02]},
                 "extent": [0.02, 0.02, 0.02], "graspable": true, "facts": ["on_table(cube)"]}
              ],
              "robot": {
                "base": {"position": [0, 0, 0]}, "shoulder_height": 0.2, "upper_arm": 0.35, "forearm": 0.35,
                "reach": [0.1, 0.75], "home": [0.25, 0, 0.35],
                "profile": {"kind": "trapezoid", "vmax": 0.2, "amax": 0.5},
                "links": [{"frame": "forearm", "capsule": {"a": [0, 0, 0], "b": [0.35, 0, 0], "radius": 0.03}}],
                "facts": ["gripper_empty"]
              }
            }"#,
        )
        .unwrap()
    }

    pub(crate) fn pick_skill() -> SkillDef {
        SkillDef::from_json(
            r#"{
              "name": "pickup",
              "params": [{"name": "?obj", "type": "graspable"}],
              "pre": ["on_table(?obj)", "gripper_empty"],
              "post": ["hold(?obj)", "!on_table(?obj)", "!gripper_empty"],
              "actions": [
                {"name": "a1", "motion": {"move_to": {"target": "?obj", "offset": [0, 0, 0.04]}}},
                {"name": "a2", "motion": {"move_by": [0, 0, -0.02]}},
                {"name": "a3", "motion": {"grasp": "?obj"}, "effects": ["hold(?obj)", "!on_table(?obj)"]},
                {"name": "a4", "motion": {"move_by": [0, 0, 0.1]}},
                {"name": "a5", "motion": "home"}
              ],
              "requirements": [
                "G[a1.ts,a2.te](!hold(?obj) & on_table(?obj)) & G[a4.ts,a5.te](hold(?obj) & !on_table(?obj))",
                "F[a4.ts,a4.te](!hold(?obj) & on_table(?obj))"
              ],
              "box_sets": {
                "target": {"boxes": [{"frame": "?obj"}]},
                "gripper": {"boxes": [{"frame": "ee", "center": [0, 0, 0.03], "half_extents": [0.02, 0.02, 0.02]}]}
              },
              "bindings": {"hold(?obj)": "gripper", "on_table(?obj)": "target"}
            }"#,
        )
        .unwrap()
    }

    #[test]
    fn boundaries_are_shared_and_sampled() {
        let scene = desk_scene();
        let (g, traj) = ground_skill(&pick_skill(), "cube", &scene, &GroundingOptions::uniform(10)).unwrap();
        assert_eq!(g.actions.len(), 5);
        for w in g.actions.windows(2) {
            assert_eq!(w[0].t_e, w[1].t_s);
        }
        let times = traj.times();
        for b in g.boundaries() {
            assert!(times.iter().any(|t| *t == b));
        }
        for a in &g.actions {
            let n = times.iter().filter(|t| **t >= a.t_s && **t <= a.t_e).count();
            assert!(n >= 10, "{} has {n} samples", a.name);
        }
        let sum: f64 = g.actions.iter().map(|a| a.t_e - a.t_s).sum();
        assert!((g.total_time() - sum).abs() < 1e-9);
        assert_eq!(g.actions[2].t_e - g.actions[2].t_s, 0.5);
    }

    #[test]
    fn object_follows_gripper_after_grasp() {
        let scene = desk_scene();
        let (g, _) = ground_skill(&pick_skill(), "cube", &scene, &GroundingOptions::uniform(5)).unwrap();
        let a4 = &g.actions[3];
        let before = g.frames_at(&scene, a4.t_s)["cube"].position();
        let after = g.frames_at(&scene, a4.t_e)["cube"].position();
        assert!((after.z - before.z - 0.1).abs() < 1e-9);
        assert!(!g.frames_at(&scene, g.actions[1].t_e).contains_key("cube"));
        assert_eq!(g.end_state().attached.len(), 1);
    }

    #[test]
    fn states_follow_intervals() {
        let scene = desk_scene();
        let (g, traj) = ground_skill(&pick_skill(), "cube", &scene, &GroundingOptions::uniform(10)).unwrap();
        let states = sample_skill_states(&g, &traj);
        let hold: Atom = "hold(cube)".parse().unwrap();
        let on: Atom = "on_table(cube)".parse().unwrap();
        for s in &states {
            let atoms: BTreeSet<&Atom> = s.literals.iter().map(|l| &l.atom).collect();
            if s.t <= g.actions[1].t_e {
                assert_eq!(atoms, BTreeSet::from([&hold, &on]));
            } else if s.t < g.actions[3].t_s {
                assert!(atoms.is_empty(), "a3 interior at {}", s.t);
            }
        }
        assert_eq!(g.eoi.len(), 1);
        assert!((g.t_eoi() - (g.actions[3].t_e - g.actions[3].t_s)).abs() < 1e-12);
    }

    #[test]
    fn fixed_interval_sampling() {
        let scene = desk_scene();
        let skill = SkillDef::from_json(
            r#"{"name": "wait", "actions": [{"name": "a1", "motion": {"dwell": 3.5}}]}"#,
        )
        .unwrap();
        let (_, traj) = ground_skill(
            &skill,
            "",
            &scene,
            &GroundingOptions {
                sampling: Sampling::FixedInterval { dt: 1.0 },
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(traj.times(), vec![0.0, 1.0, 2.0, 3.0, 3.5]);
    }

    #[test]
    fn unreachable_waypoint_names_action() {
        let mut scene = desk_scene();
        scene.object_mut("cube").unwrap().pose = Pose::from_translation(Vector3::new(2.0, 0.0, 0.0));
        match ground_skill(&pick_skill(), "cube", &scene, &GroundingOptions::uniform(5)) {
            Err(Error::Grounding { action, .. }) => assert_eq!(action, "a1"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn profile_drives_duration() {
        let mut scene = desk_scene();
        scene.robot.profile = MotionProfile::constant_rate(0.1);
        let (g, _) = ground_skill(&pick_skill(), "cube", &scene, &GroundingOptions::uniform(3)).unwrap();
        assert!((g.actions[1].t_e - g.actions[1].t_s - 0.2).abs() < 1e-9);
    }

    #[test]
    fn trajectory_round_trips() {
        let scene = desk_scene();
        let (_, traj) = ground_skill(&pick_skill(), "cube", &scene, &GroundingOptions::uniform(3)).unwrap();
        let back = Trajectory::from_json(&traj.to_json()).unwrap();
        assert_eq!(back.len(), traj.len());
        for (a, b) in back.samples.iter().zip(&traj.samples) {
            assert!((a.t - b.t).abs() < 1e-12);
        }
    }
}

//! Runtime phase as a discrete-event simulation: the grounded skill runs,
//! scripted faults mutate the world, atoms are observed only while their
//! targets have k-coverage, and each requirement is monitored with
//! three-valued logic. A detected fault stops the robot or triggers a
//! retry grounded from the post-fault state.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::coverage::{literal_covered, CoveragePolicy};
use crate::error::{Error, Result};
use crate::geometry::Pose;
use crate::grounding::{
    ground_skill, GroundRequirement, GroundedSkill, GroundingOptions, RobotStart, Sampling, Trajectory, TIME_EPS,
};
use crate::mtl::{Evaluator, Formula, GroundFormula, Truth};
use crate::skill::SkillDef;
use crate::world::{Atom, CameraSpec, FrameView, Scene, WorldState};

/// When a fault happens: absolute seconds, or a fraction of an action.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FaultTime {
    Seconds(f64),
    During {
        action: String,
        #[serde(default)]
        fraction: f64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FaultInjection {
    pub name: String,
    pub at: FaultTime,
    #[serde(default)]
    pub set: Vec<Atom>,
    #[serde(default)]
    pub clear: Vec<Atom>,
    /// Object released from the end effector by the fault.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detach: Option<String>,
    /// Where the detached object comes to rest; defaults to its pose
    /// before the skill started.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub landing: Option<Pose>,
}

impl FaultInjection {
    pub fn time(&self, g: &GroundedSkill) -> Result<f64> {
        let t = match &self.at {
            FaultTime::Seconds(s) => g.t_start() + s,
            FaultTime::During { action, fraction } => {
                if !(0.0..=1.0).contains(fraction) {
                    return Err(Error::validation(format!("fault `{}`: fraction must be in [0, 1]", self.name)));
                }
                let a = g
                    .actions
                    .iter()
                    .find(|a| &a.name == action)
                    .ok_or_else(|| Error::UnknownActionLabel(action.clone()))?;
                a.t_s + fraction * (a.t_e - a.t_s)
            }
        };
        if !(t >= g.t_start() - TIME_EPS && t <= g.t_end() + TIME_EPS) {
            return Err(Error::validation(format!(
                "fault `{}` at {t} s is outside the skill horizon [{}, {}]",
                self.name,
                g.t_start(),
                g.t_end()
            )));
        }
        Ok(t)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Response {
    Stop,
    #[default]
    Retry,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FaultPolicy {
    #[serde(default)]
    pub response: Response,
    /// Atoms that must be observed true before a retry starts.
    #[serde(default)]
    pub retry_preconditions: Vec<Atom>,
    #[serde(default = "one")]
    pub max_attempts: usize,
}

fn one() -> usize {
    1
}

impl Default for FaultPolicy {
    fn default() -> Self {
        FaultPolicy {
            response: Response::Retry,
            retry_preconditions: Vec::new(),
            max_attempts: 1,
        }
    }
}

/// A runtime scenario for one committed skill.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    /// Program step receiving the faults; `None` selects the first step.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub skill: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parameter: Option<String>,
    #[serde(default)]
    pub faults: Vec<FaultInjection>,
    #[serde(default)]
    pub policy: FaultPolicy,
    /// Atoms observed directly with a fixed value (e.g. gripper health).
    #[serde(default)]
    pub observable: BTreeMap<Atom, bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sampling: Option<Sampling>,
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Observation {
    Observed(bool),
    Unobservable,
}

impl Observation {
    pub fn truth(self) -> Truth {
        match self {
            Observation::Observed(b) => Truth::from_bool(b),
            Observation::Unobservable => Truth::Unknown,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObservationSample {
    pub t: f64,
    pub values: BTreeMap<Atom, Observation>,
    /// Simulator ground truth for the same atoms.
    pub truth: BTreeMap<Atom, bool>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ObservationTrace {
    pub samples: Vec<ObservationSample>,
}

impl ObservationTrace {
    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }
}

/// Inputs to [`simulate_execution`] beyond the grounding.
pub struct SimulationInput<'a> {
    pub scene: &'a Scene,
    pub cams: &'a [CameraSpec],
    pub policy: &'a CoveragePolicy,
    pub initial: &'a WorldState,
    pub faults: &'a [FaultInjection],
    pub observable: &'a BTreeMap<Atom, bool>,
    /// Extra atoms to observe besides the requirement atoms.
    pub extra_atoms: &'a [Atom],
}

struct ResolvedFault<'a> {
    t: f64,
    fault: &'a FaultInjection,
}

fn resolve_faults<'a>(g: &GroundedSkill, faults: &'a [FaultInjection]) -> Result<Vec<ResolvedFault<'a>>> {
    let mut out = faults
        .iter()
        .map(|f| Ok(ResolvedFault { t: f.time(g)?, fault: f }))
        .collect::<Result<Vec<_>>>()?;
    out.sort_by(|a, b| a.t.total_cmp(&b.t));
    Ok(out)
}

/// Ground-truth world state at `t`: effects at action ends, then faults,
/// in time order (effects first on ties).
fn truth_at(g: &GroundedSkill, initial: &WorldState, faults: &[ResolvedFault<'_>], t: f64) -> WorldState {
    let mut events: Vec<(f64, u8, usize)> = Vec::new();
    for (i, a) in g.actions.iter().enumerate() {
        if a.t_e <= t + TIME_EPS {
            events.push((a.t_e, 0, i));
        }
    }
    for (i, f) in faults.iter().enumerate() {
        if f.t <= t + TIME_EPS {
            events.push((f.t, 1, i));
        }
    }
    events.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut w = initial.clone();
    for (_, kind, i) in events {
        w = if kind == 0 {
            w.apply_literals(&g.actions[i].effects)
        } else {
            w.progress(&faults[i].fault.set, &faults[i].fault.clear)
        };
    }
    w
}

/// Frame poses at a sample after applying detach faults up to `t`.
fn frames_after_faults(
    sample_frames: &BTreeMap<String, Pose>,
    scene: &Scene,
    faults: &[ResolvedFault<'_>],
    t: f64,
) -> BTreeMap<String, Pose> {
    let mut frames = sample_frames.clone();
    for f in faults.iter().filter(|f| f.t <= t + TIME_EPS) {
        if let Some(obj) = &f.fault.detach {
            let landing = f
                .fault
                .landing
                .or_else(|| scene.object(obj).map(|o| o.pose))
                .unwrap_or_default();
            frames.insert(obj.clone(), landing);
        }
    }
    frames
}

/// Runs the grounded skill against scripted faults. An atom is observed
/// (with its true value) at a sample iff its target has k-coverage there.
pub fn simulate_execution(g: &GroundedSkill, traj: &Trajectory, input: &SimulationInput<'_>) -> Result<ObservationTrace> {
    input.policy.validate()?;
    let faults = resolve_faults(g, input.faults)?;
    let mut atoms: BTreeSet<Atom> = g.targets.keys().cloned().collect();
    atoms.extend(input.observable.keys().cloned());
    atoms.extend(input.extra_atoms.iter().cloned());

    let mut samples = Vec::with_capacity(traj.samples.len());
    for s in &traj.samples {
        let world = truth_at(g, input.initial, &faults, s.t);
        let frames = frames_after_faults(&s.frames, input.scene, &faults, s.t);
        let view = FrameView::new(input.scene, s.t, &frames);
        let mut by_target: BTreeMap<&str, bool> = BTreeMap::new();
        let mut values = BTreeMap::new();
        let mut truth = BTreeMap::new();
        for atom in &atoms {
            let actual = world.contains(atom);
            let obs = if let Some(v) = input.observable.get(atom) {
                Observation::Observed(*v)
            } else if let Some(set) = g.targets.get(atom) {
                let covered = match by_target.get(set.id.as_str()) {
                    Some(c) => *c,
                    None => {
                        let boxes = set.place(&view)?;
                        let exclude: BTreeSet<&str> = set.frames().collect();
                        let occluders = if input.policy.occlusion {
                            view.occluders(&exclude)?
                        } else {
                            Vec::new()
                        };
                        let c = literal_covered(input.cams, &boxes, &set.detection, input.policy, &occluders).covered;
                        by_target.insert(set.id.as_str(), c);
                        c
                    }
                };
                if covered {
                    Observation::Observed(actual)
                } else {
                    Observation::Unobservable
                }
            } else {
                Observation::Unobservable
            };
            values.insert(atom.clone(), obs);
            truth.insert(atom.clone(), actual);
        }
        samples.push(ObservationSample {
            t: s.t,
            values,
            truth,
        });
    }
    Ok(ObservationTrace { samples })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictStatus {
    Satisfied,
    Violated,
    FaultDetected,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonitorVerdict {
    pub formula: String,
    pub status: VerdictStatus,
    /// Detection time of a violation or fault.
    #[serde(default, serialize_with = "round3_opt")]
    pub t_r: Option<f64>,
    #[serde(default, serialize_with = "round3_opt")]
    pub t_redo: Option<f64>,
    #[serde(default, serialize_with = "round3_opt")]
    pub t_e: Option<f64>,
}

impl MonitorVerdict {
    pub fn is_detection(&self) -> bool {
        matches!(self.status, VerdictStatus::Violated | VerdictStatus::FaultDetected)
    }
}

fn round3_opt<S: serde::Serializer>(v: &Option<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match v {
        Some(x) => s.serialize_f64(round3(*x)),
        None => s.serialize_none(),
    }
}

fn round3(x: f64) -> f64 {
    let r = (x * 1000.0).round() / 1000.0;
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

/// Monitors every top-level conjunct of every requirement. `G` conjuncts
/// are violated at the first sample whose observations falsify the body;
/// `F` conjuncts describe events of interest and report a detected fault
/// at the first sample where the body is observed true.
pub fn monitor(trace: &ObservationTrace, requirements: &[GroundRequirement]) -> Vec<MonitorVerdict> {
    let times = trace.times();
    let mut out = Vec::new();
    for r in requirements {
        for c in r.formula.conjuncts() {
            out.push(monitor_conjunct(trace, &times, c));
        }
    }
    out
}

fn monitor_conjunct(trace: &ObservationTrace, times: &[f64], f: &GroundFormula) -> MonitorVerdict {
    let lookup = |j: usize, a: &Atom| -> Result<Truth> {
        Ok(trace.samples[j]
            .values
            .get(a)
            .map(|o| o.truth())
            .unwrap_or(Truth::Unknown))
    };
    let mut ev = Evaluator::new(times, lookup);
    let verdict = |status, t_r| MonitorVerdict {
        formula: f.to_string(),
        status,
        t_r,
        t_redo: None,
        t_e: None,
    };
    if times.is_empty() {
        return verdict(VerdictStatus::Inconclusive, None);
    }
    match f {
        Formula::Always(i, body) => {
            let mut unknown = false;
            for j in ev.samples_in(i) {
                match ev.eval(body, j).unwrap_or(Truth::Unknown) {
                    Truth::False => return verdict(VerdictStatus::Violated, Some(times[j])),
                    Truth::Unknown => unknown = true,
                    Truth::True => {}
                }
            }
            verdict(
                if unknown {
                    VerdictStatus::Inconclusive
                } else {
                    VerdictStatus::Satisfied
                },
                None,
            )
        }
        Formula::Eventually(i, body) => {
            let mut unknown = false;
            for j in ev.samples_in(i) {
                match ev.eval(body, j).unwrap_or(Truth::Unknown) {
                    Truth::True => return verdict(VerdictStatus::FaultDetected, Some(times[j])),
                    Truth::Unknown => unknown = true,
                    Truth::False => {}
                }
            }
            verdict(
                if unknown {
                    VerdictStatus::Inconclusive
                } else {
                    VerdictStatus::Satisfied
                },
                None,
            )
        }
        other => match ev.eval(other, 0).unwrap_or(Truth::Unknown) {
            Truth::True => verdict(VerdictStatus::Satisfied, None),
            Truth::False => verdict(VerdictStatus::Violated, Some(times[0])),
            Truth::Unknown => verdict(VerdictStatus::Inconclusive, None),
        },
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutcomeStatus {
    Completed,
    Stopped,
    Retried,
    StoppedWithTimeout,
}

/// Result of running one skill: verdicts and the fault timeline.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub skill: String,
    pub parameter: String,
    pub status: OutcomeStatus,
    #[serde(serialize_with = "round3_opt")]
    pub t_f: Option<f64>,
    #[serde(serialize_with = "round3_opt")]
    pub t_r: Option<f64>,
    #[serde(serialize_with = "round3_opt")]
    pub t_redo: Option<f64>,
    #[serde(serialize_with = "round3_f")]
    pub t_e: f64,
    pub verdicts: Vec<MonitorVerdict>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub retry_verdicts: Vec<MonitorVerdict>,
    /// Executed sample times, original run then retry.
    #[serde(skip)]
    pub trajectory: Trajectory,
    #[serde(skip)]
    pub retry: Option<GroundedSkill>,
}

fn round3_f<S: serde::Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_f64(round3(*v))
}

impl Outcome {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("outcome serialises")
    }
}

/// Everything the fault handler needs to re-ground a retry.
pub struct RetryContext<'a> {
    pub skill: &'a SkillDef,
    pub scene: &'a Scene,
    pub sampling: &'a Sampling,
    pub faults: &'a [FaultInjection],
    pub sim: &'a SimulationInput<'a>,
}

/// Reacts to the earliest detection in `verdicts`. A retry waits for the
/// retry preconditions to be observed true, truncates the run there and
/// appends the skill re-grounded from the robot's state at that instant
/// with detached objects at their landing poses.
pub fn handle_fault(
    verdicts: &[MonitorVerdict],
    policy: &FaultPolicy,
    g: &GroundedSkill,
    traj: &Trajectory,
    trace: &ObservationTrace,
    ctx: &RetryContext<'_>,
) -> Result<Outcome> {
    let faults = resolve_faults(g, ctx.faults)?;
    let t_f = faults.first().map(|f| f.t);
    let mut verdicts = verdicts.to_vec();
    let trigger = verdicts
        .iter()
        .enumerate()
        .filter(|(_, v)| v.is_detection())
        .min_by(|a, b| a.1.t_r.unwrap_or(f64::INFINITY).total_cmp(&b.1.t_r.unwrap_or(f64::INFINITY)))
        .map(|(i, v)| (i, v.t_r.expect("detections carry t_r")));
    let base = |status, t_r, t_redo, t_e, verdicts, trajectory| Outcome {
        skill: g.skill.clone(),
        parameter: g.parameter.clone(),
        status,
        t_f,
        t_r,
        t_redo,
        t_e,
        verdicts,
        retry_verdicts: Vec::new(),
        trajectory,
        retry: None,
    };
    let Some((idx, t_r)) = trigger else {
        return Ok(base(OutcomeStatus::Completed, None, None, g.t_end(), verdicts, traj.clone()));
    };
    let truncate = |t: f64| Trajectory {
        samples: traj.samples.iter().filter(|s| s.t <= t + TIME_EPS).cloned().collect(),
    };
    if policy.response == Response::Stop || policy.max_attempts == 0 {
        verdicts[idx].t_e = Some(t_r);
        return Ok(base(OutcomeStatus::Stopped, Some(t_r), None, t_r, verdicts, truncate(t_r)));
    }
    let redo = trace.samples.iter().find(|s| {
        s.t >= t_r - TIME_EPS
            && policy
                .retry_preconditions
                .iter()
                .all(|a| s.values.get(a) == Some(&Observation::Observed(true)))
    });
    let Some(redo) = redo else {
        let t_end = g.t_end();
        verdicts[idx].t_e = Some(t_end);
        return Ok(base(
            OutcomeStatus::StoppedWithTimeout,
            Some(t_r),
            None,
            t_end,
            verdicts,
            traj.clone(),
        ));
    };
    let t_redo = redo.t;

    let mut scene = ctx.scene.clone();
    let mut detached = BTreeSet::new();
    for f in faults.iter().filter(|f| f.t <= t_redo + TIME_EPS) {
        if let Some(obj) = &f.fault.detach {
            let landing = f.fault.landing.or_else(|| scene.object(obj).map(|o| o.pose));
            if let (Some(o), Some(p)) = (scene.object_mut(obj), landing) {
                o.pose = p;
            }
            detached.insert(obj.clone());
        }
    }
    let start = RobotStart {
        ee: Some(g.ee_at(t_redo).into()),
        attached: g
            .attachments
            .iter()
            .filter(|a| a.from <= t_redo + TIME_EPS && a.until.map_or(true, |u| u > t_redo) && !detached.contains(&a.object))
            .map(|a| (a.object.clone(), a.relative))
            .collect(),
    };
    let opts = GroundingOptions {
        sampling: ctx.sampling.clone(),
        start_time: t_redo,
        start,
    };
    let (retry, retry_traj) = ground_skill(ctx.skill, &g.parameter, &scene, &opts)?;
    let world_at_redo = truth_at(g, ctx.sim.initial, &faults, t_redo);
    let retry_input = SimulationInput {
        scene: &scene,
        cams: ctx.sim.cams,
        policy: ctx.sim.policy,
        initial: &world_at_redo,
        faults: &[],
        observable: ctx.sim.observable,
        extra_atoms: ctx.sim.extra_atoms,
    };
    let retry_trace = simulate_execution(&retry, &retry_traj, &retry_input)?;
    let retry_verdicts = monitor(&retry_trace, &retry.requirements);

    let mut spliced = truncate(t_redo);
    spliced
        .samples
        .extend(retry_traj.samples.into_iter().filter(|s| s.t > t_redo + TIME_EPS));
    let t_e = retry.t_end();
    verdicts[idx].t_redo = Some(t_redo);
    verdicts[idx].t_e = Some(t_e);
    let mut out = base(OutcomeStatus::Retried, Some(t_r), Some(t_redo), t_e, verdicts, spliced);
    out.retry_verdicts = retry_verdicts;
    out.retry = Some(retry);
    Ok(out)
}

/// Simulates, monitors and handles faults for one grounded skill.
pub fn run_skill(
    skill: &SkillDef,
    g: &GroundedSkill,
    traj: &Trajectory,
    scenario: &Scenario,
    sim: &SimulationInput<'_>,
    sampling: &Sampling,
) -> Result<Outcome> {
    let trace = simulate_execution(g, traj, sim)?;
    let verdicts = monitor(&trace, &g.requirements);
    let ctx = RetryContext {
        skill,
        scene: sim.scene,
        sampling,
        faults: sim.faults,
        sim,
    };
    handle_fault(&verdicts, &scenario.policy, g, traj, &trace, &ctx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mtl::TimeInterval;

    fn atom(s: &str) -> Atom {
        s.parse().unwrap()
    }

    /// Twenty samples at t = 0..19 with per-sample observations of `slip`.
    fn slip_trace(visible_from: usize, slip_from: usize) -> ObservationTrace {
        ObservationTrace {
            samples: (0..20)
                .map(|j| {
                    let truth = j >= slip_from;
                    let obs = if j >= visible_from {
                        Observation::Observed(truth)
                    } else {
                        Observation::Unobservable
                    };
                    ObservationSample {
                        t: j as f64,
                        values: BTreeMap::from([(atom("slip"), obs)]),
                        truth: BTreeMap::from([(atom("slip"), truth)]),
                    }
                })
                .collect(),
        }
    }

    fn req(f: GroundFormula) -> GroundRequirement {
        GroundRequirement {
            text: f.to_string(),
            formula: f,
        }
    }

    #[test]
    fn always_satisfied_when_observed_true() {
        let trace = slip_trace(0, 0);
        let f = Formula::always(TimeInterval::new(0.0, 19.0), Formula::atom(atom("slip")));
        let v = monitor(&trace, &[req(f)]);
        assert_eq!(v[0].status, VerdictStatus::Satisfied);
    }

    #[test]
    fn fault_detected_at_first_visible_sample() {
        let trace = slip_trace(0, 14);
        let f = Formula::eventually(TimeInterval::new(0.0, 19.0), Formula::atom(atom("slip")));
        let v = monitor(&trace, &[req(f)]);
        assert_eq!(v[0].status, VerdictStatus::FaultDetected);
        assert_eq!(v[0].t_r, Some(14.0));
    }

    #[test]
    fn occlusion_delays_detection() {
        let trace = slip_trace(17, 14);
        let f = Formula::and(
            Formula::eventually(TimeInterval::new(10.0, 15.0), Formula::atom(atom("slip"))),
            Formula::always(TimeInterval::new(10.0, 19.0), Formula::not(Formula::atom(atom("slip")))),
        );
        let v = monitor(&trace, &[req(f)]);
        assert_eq!(v[0].status, VerdictStatus::Inconclusive);
        assert_eq!(v[1].status, VerdictStatus::Violated);
        assert_eq!(v[1].t_r, Some(17.0));
    }

    #[test]
    fn unobserved_always_is_inconclusive() {
        let trace = slip_trace(25, 30);
        let f = Formula::always(TimeInterval::new(0.0, 19.0), Formula::not(Formula::atom(atom("slip"))));
        assert_eq!(monitor(&trace, &[req(f)])[0].status, VerdictStatus::Inconclusive);
    }

    #[test]
    fn fault_time_during_action() {
        let scene = crate::grounding::tests::desk_scene();
        let skill = crate::grounding::tests::pick_skill();
        let (g, _) = ground_skill(&skill, "cube", &scene, &GroundingOptions::uniform(5)).unwrap();
        let f = FaultInjection {
            name: "slip".into(),
            at: FaultTime::During {
                action: "a4".into(),
                fraction: 0.5,
            },
            set: vec![],
            clear: vec![],
            detach: None,
            landing: None,
        };
        let a4 = &g.actions[3];
        assert!((f.time(&g).unwrap() - (a4.t_s + a4.t_e) / 2.0).abs() < 1e-12);
        let late = FaultInjection {
            at: FaultTime::Seconds(1e3),
            ..f
        };
        assert!(late.time(&g).is_err());
    }
}

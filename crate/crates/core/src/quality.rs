//! Sensing-quality metrics over a sampled skill execution.
//!
//! A skill state is covered when each of its literals is covered by at
//! least `k` cameras. Maximal runs of covered states form segments; a run
//! spanning samples `j..=j+n` contributes `t[j+n] - t[j]`, so isolated
//! covered samples add nothing. `Q_avg` divides the summed segment length
//! by the execution time, `Q_eoi` sums segments found separately inside
//! each event-of-interest interval and divides by the summed interval
//! lengths.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::coverage::{literal_covered, CoveragePolicy};
use crate::error::{Error, Result};
use crate::grounding::{
    ground_skill, sample_skill_states, GroundedSkill, GroundingOptions, RobotStart, Sampling, SkillState,
    Trajectory,
};
use crate::mtl::TimeInterval;
use crate::skill::SkillDef;
use crate::world::{Atom, CameraSpec, FrameView, Scene};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LiteralRecord {
    pub atom: Atom,
    pub target: String,
    pub per_camera: Vec<bool>,
    pub covered: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimelineSample {
    pub t: f64,
    pub literals: Vec<LiteralRecord>,
    /// `C(S)`: every literal covered (vacuously true for empty states).
    pub covered: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CoverageTimeline {
    pub cameras: Vec<String>,
    pub samples: Vec<TimelineSample>,
}

impl CoverageTimeline {
    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }

    pub fn flags(&self) -> Vec<bool> {
        self.samples.iter().map(|s| s.covered).collect()
    }
}

/// Coverage of every skill state, using the trajectory's frame poses (and
/// the robot links they imply as occluders) at each sample.
pub fn evaluate_timeline(
    g: &GroundedSkill,
    traj: &Trajectory,
    states: &[SkillState],
    scene: &Scene,
    cams: &[CameraSpec],
    policy: &CoveragePolicy,
) -> Result<CoverageTimeline> {
    policy.validate()?;
    if states.len() != traj.samples.len() {
        return Err(Error::validation("skill states and trajectory samples differ in length"));
    }
    let mut samples = Vec::with_capacity(states.len());
    for (state, sample) in states.iter().zip(&traj.samples) {
        let view = FrameView::new(scene, sample.t, &sample.frames);
        let mut by_target: BTreeMap<&str, (Vec<bool>, bool)> = BTreeMap::new();
        let mut literals = Vec::with_capacity(state.literals.len());
        for lit in &state.literals {
            let set = g
                .targets
                .get(&lit.atom)
                .ok_or_else(|| Error::validation(format!("atom `{}` has no resolved target", lit.atom)))?;
            if !by_target.contains_key(set.id.as_str()) {
                let boxes = set.place(&view)?;
                let exclude: BTreeSet<&str> = set.frames().collect();
                let occluders = if policy.occlusion {
                    view.occluders(&exclude)?
                } else {
                    Vec::new()
                };
                let c = literal_covered(cams, &boxes, &set.detection, policy, &occluders);
                by_target.insert(set.id.as_str(), (c.per_camera, c.covered));
            }
            let (per_camera, covered) = by_target[set.id.as_str()].clone();
            literals.push(LiteralRecord {
                atom: lit.atom.clone(),
                target: set.id.clone(),
                per_camera,
                covered,
            });
        }
        samples.push(TimelineSample {
            t: sample.t,
            covered: literals.iter().all(|l| l.covered),
            literals,
        });
    }
    Ok(CoverageTimeline {
        cameras: cams.iter().map(|c| c.name.clone()).collect(),
        samples,
    })
}

/// A maximal run of covered samples `start..=end`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverageSegment {
    pub start: usize,
    pub end: usize,
    #[serde(serialize_with = "round3")]
    pub t_start: f64,
    #[serde(serialize_with = "round3")]
    pub t_end: f64,
    #[serde(serialize_with = "round3")]
    pub delta: f64,
}

/// Maximal covered runs of a time-ordered flag sequence.
pub fn segments_of(times: &[f64], covered: &[bool]) -> Vec<CoverageSegment> {
    let mut out = Vec::new();
    let mut j = 0;
    while j < covered.len() {
        if !covered[j] {
            j += 1;
            continue;
        }
        let start = j;
        while j + 1 < covered.len() && covered[j + 1] {
            j += 1;
        }
        out.push(CoverageSegment {
            start,
            end: j,
            t_start: times[start],
            t_end: times[j],
            delta: times[j] - times[start],
        });
        j += 1;
    }
    out
}

pub fn covered_segments(tl: &CoverageTimeline) -> Vec<CoverageSegment> {
    segments_of(&tl.times(), &tl.flags())
}

pub fn q_avg(segments: &[CoverageSegment], t_total: f64) -> Result<f64> {
    if !(t_total > 0.0) {
        return Err(Error::validation("execution time must be positive"));
    }
    let sum = segments.iter().fold(0.0, |acc, s| acc + s.delta);
    Ok((sum / t_total).clamp(0.0, 1.0))
}

/// Segments found independently within each interval, with sample
/// indices relative to the whole timeline.
pub fn eoi_segments(tl: &CoverageTimeline, eoi: &[TimeInterval]) -> Vec<CoverageSegment> {
    let times = tl.times();
    let flags = tl.flags();
    let mut out = Vec::new();
    for i in eoi {
        let lo = times.partition_point(|t| *t < i.lo - crate::grounding::TIME_EPS);
        let hi = times.partition_point(|t| *t <= i.hi + crate::grounding::TIME_EPS);
        if lo >= hi {
            continue;
        }
        out.extend(segments_of(&times[lo..hi], &flags[lo..hi]).into_iter().map(|mut s| {
            s.start += lo;
            s.end += lo;
            s
        }));
    }
    out
}

/// `None` when there is no event-of-interest time.
pub fn q_eoi(tl: &CoverageTimeline, eoi: &[TimeInterval], t_eoi: f64) -> Option<f64> {
    if !(t_eoi > 0.0) {
        return None;
    }
    let sum = eoi_segments(tl, eoi).iter().fold(0.0, |acc, s| acc + s.delta);
    Some((sum / t_eoi).clamp(0.0, 1.0))
}

fn round_to<S: serde::Serializer>(v: f64, places: i32, s: S) -> std::result::Result<S::Ok, S::Error> {
    let f = 10f64.powi(places);
    let r = (v * f).round() / f;
    s.serialize_f64(if r == 0.0 { 0.0 } else { r })
}

fn round3<S: serde::Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    round_to(*v, 3, s)
}

fn round4<S: serde::Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    round_to(*v, 4, s)
}

fn round4_opt<S: serde::Serializer>(v: &Option<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match v {
        Some(x) => round_to(*x, 4, s),
        None => s.serialize_none(),
    }
}

fn round3_intervals<S: serde::Serializer>(v: &[TimeInterval], s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    #[derive(Serialize)]
    struct Rounded {
        #[serde(serialize_with = "round3")]
        lo: f64,
        #[serde(serialize_with = "round3")]
        hi: f64,
    }
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for i in v {
        seq.serialize_element(&Rounded { lo: i.lo, hi: i.hi })?;
    }
    seq.end()
}

/// Quality feedback for one candidate parameter. Exported documents round
/// Q values to 4 decimals and times to 3.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QualityReport {
    pub skill: String,
    pub parameter: String,
    #[serde(serialize_with = "round4")]
    pub q_avg: f64,
    #[serde(serialize_with = "round4_opt")]
    pub q_eoi: Option<f64>,
    /// `T^p`, seconds.
    #[serde(serialize_with = "round3")]
    pub t_total: f64,
    #[serde(serialize_with = "round3")]
    pub t_eoi: f64,
    #[serde(serialize_with = "round3")]
    pub t_start: f64,
    #[serde(serialize_with = "round3_intervals")]
    pub eoi: Vec<TimeInterval>,
    pub samples: usize,
    pub segments: Vec<CoverageSegment>,
    pub eoi_segments: Vec<CoverageSegment>,
}

impl QualityReport {
    pub fn execution_time(&self) -> f64 {
        self.t_total
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }
}

pub fn quality_report(g: &GroundedSkill, tl: &CoverageTimeline) -> Result<QualityReport> {
    let segments = covered_segments(tl);
    let t_total = g.total_time();
    let t_eoi = g.t_eoi();
    Ok(QualityReport {
        skill: g.skill.clone(),
        parameter: g.parameter.clone(),
        q_avg: q_avg(&segments, t_total)?,
        q_eoi: q_eoi(tl, &g.eoi, t_eoi),
        t_total,
        t_eoi,
        t_start: g.t_start(),
        eoi: g.eoi.clone(),
        samples: tl.samples.len(),
        segments,
        eoi_segments: eoi_segments(tl, &g.eoi),
    })
}

/// Settings for computing one candidate's quality.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalSettings {
    pub sampling: Sampling,
    #[serde(default)]
    pub policy: CoveragePolicy,
    #[serde(default)]
    pub start: RobotStart,
}

impl Default for EvalSettings {
    fn default() -> Self {
        EvalSettings::uniform(10)
    }
}

impl EvalSettings {
    pub fn uniform(min_n: usize) -> Self {
        EvalSettings {
            sampling: Sampling::uniform(min_n),
            policy: CoveragePolicy::default(),
            start: RobotStart::default(),
        }
    }
}

/// Everything computed for one candidate.
#[derive(Clone, Debug)]
pub struct Evaluation {
    pub grounded: GroundedSkill,
    pub trajectory: Trajectory,
    pub states: Vec<SkillState>,
    pub timeline: CoverageTimeline,
    pub report: QualityReport,
}

/// Grounds `skill` for `p` and computes its quality with the scene cameras.
pub fn evaluate_candidate(skill: &SkillDef, p: &str, scene: &Scene, settings: &EvalSettings) -> Result<Evaluation> {
    evaluate_with_cameras(skill, p, scene, &scene.cameras, settings)
}

pub fn evaluate_with_cameras(
    skill: &SkillDef,
    p: &str,
    scene: &Scene,
    cams: &[CameraSpec],
    settings: &EvalSettings,
) -> Result<Evaluation> {
    let opts = GroundingOptions {
        sampling: settings.sampling.clone(),
        start_time: 0.0,
        start: settings.start.clone(),
    };
    let (grounded, trajectory) = ground_skill(skill, p, scene, &opts)?;
    let states = sample_skill_states(&grounded, &trajectory);
    let timeline = evaluate_timeline(&grounded, &trajectory, &states, scene, cams, &settings.policy)?;
    let report = quality_report(&grounded, &timeline)?;
    Ok(Evaluation {
        grounded,
        trajectory,
        states,
        timeline,
        report,
    })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    Avg,
    Eoi,
    /// `Q_eoi`, then `Q_avg`, then shorter execution time.
    #[default]
    Lexicographic,
}

impl std::str::FromStr for Criterion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "avg" => Ok(Criterion::Avg),
            "eoi" => Ok(Criterion::Eoi),
            "lexicographic" | "lex" => Ok(Criterion::Lexicographic),
            other => Err(Error::validation(format!(
                "unknown criterion `{other}` (expected avg, eoi or lexicographic)"
            ))),
        }
    }
}

/// Undefined `Q_eoi` ranks below every defined value.
fn eoi_key(r: &QualityReport) -> f64 {
    r.q_eoi.unwrap_or(f64::NEG_INFINITY)
}

/// Compares two reports, best first.
pub fn compare_reports(a: &QualityReport, b: &QualityReport, criterion: Criterion) -> Ordering {
    let desc = |x: f64, y: f64| y.total_cmp(&x);
    let primary = match criterion {
        Criterion::Avg => desc(a.q_avg, b.q_avg),
        Criterion::Eoi => desc(eoi_key(a), eoi_key(b)),
        Criterion::Lexicographic => desc(eoi_key(a), eoi_key(b)).then(desc(a.q_avg, b.q_avg)),
    };
    primary
        .then(a.t_total.total_cmp(&b.t_total))
        .then_with(|| a.parameter.cmp(&b.parameter))
}

/// Full ranked list, best first.
pub fn rank_parameters(reports: &[QualityReport], criterion: Criterion) -> Vec<QualityReport> {
    let mut out = reports.to_vec();
    out.sort_by(|a, b| compare_reports(a, b, criterion));
    out
}

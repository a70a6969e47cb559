//! Interactive programming sessions: evaluate candidates for a skill,
//! commit one, repeat, then run the program against fault scenarios.
//!
//! A session is persisted as an append-only log of the commands that
//! changed it (one JSON record per line). Loading replays the log, which
//! reproduces every report exactly.

use std::collections::BTreeMap;
use std::fs::{self, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::coverage::{CoveragePolicy, VertexRule};
use crate::error::{Error, Result};
use crate::grounding::{ground_skill, GroundingOptions, RobotStart, Sampling};
use crate::monitor::{run_skill, Outcome, OutcomeStatus, Scenario, SimulationInput};
use crate::planner::{check_dependencies, enumerate_candidates, DependencyReport};
use crate::quality::{compare_reports, evaluate_candidate, Criterion, EvalSettings, QualityReport};
use crate::skill::{SkillDef, SkillDoc};
use crate::world::{Atom, Scene, WorldState};

pub const DEFAULT_MIN_N: usize = 10;

fn default_min_n() -> usize {
    DEFAULT_MIN_N
}

fn default_k() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluateRequest {
    pub skill: String,
    /// Whitespace-separated category tags, e.g. `"red screw"`.
    #[serde(default)]
    pub filter: String,
    #[serde(default = "default_min_n")]
    pub min_n: usize,
    /// Fixed sampling interval in seconds; overrides `min_n` when set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default)]
    pub criterion: Criterion,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vertex_rule: Option<VertexRule>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub occlusion: Option<bool>,
}

impl EvaluateRequest {
    pub fn new(skill: &str, filter: &str) -> Self {
        EvaluateRequest {
            skill: skill.into(),
            filter: filter.into(),
            min_n: DEFAULT_MIN_N,
            dt: None,
            k: 1,
            criterion: Criterion::Lexicographic,
            vertex_rule: None,
            occlusion: None,
        }
    }

    fn sampling(&self) -> Sampling {
        match self.dt {
            Some(dt) => Sampling::FixedInterval { dt },
            None => Sampling::Uniform { min_n: self.min_n },
        }
    }

    fn policy(&self) -> CoveragePolicy {
        let d = CoveragePolicy::default();
        CoveragePolicy {
            vertex_rule: self.vertex_rule.unwrap_or(d.vertex_rule),
            occlusion: self.occlusion.unwrap_or(d.occlusion),
            k: self.k,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=10_000).contains(&self.min_n) {
            return Err(Error::validation("min_n must be between 1 and 10000"));
        }
        if self.k == 0 {
            return Err(Error::validation("k must be at least 1"));
        }
        self.sampling().validate()?;
        self.policy().validate()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CandidateResult {
    pub candidate: String,
    pub dependency: DependencyReport,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<QualityReport>,
    /// Why the candidate cannot be used, when it is infeasible.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub reasons: Vec<String>,
}

impl CandidateResult {
    pub fn feasible(&self) -> bool {
        self.report.is_some()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvaluationResult {
    pub request: EvaluateRequest,
    pub status: String,
    /// Feasible candidates ranked best first, then infeasible ones.
    pub candidates: Vec<CandidateResult>,
}

impl EvaluationResult {
    pub fn candidate(&self, name: &str) -> Option<&CandidateResult> {
        self.candidates.iter().find(|c| c.candidate == name)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CommitRequest {
    pub skill: String,
    pub parameter: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProgramStep {
    pub skill: String,
    pub parameter: String,
    pub report: QualityReport,
    pub request: EvaluateRequest,
    #[serde(skip)]
    start: StepStart,
}

/// State the step was evaluated in, used to re-ground it for runs.
#[derive(Clone, Debug, Default, PartialEq)]
struct StepStart {
    scene: Option<Scene>,
    world: WorldState,
    robot: RobotStart,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub outcomes: Vec<Outcome>,
    pub status: OutcomeStatus,
    /// Completion time of the program (or the stop time).
    pub t_e: f64,
}

/// Session creation document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateRequest {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub scene: Scene,
    pub skills: Vec<SkillDoc>,
    /// Initial world state; defaults to the facts in the scene.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub world: Option<Vec<Atom>>,
    #[serde(default)]
    pub robot: RobotStart,
}

/// One line of a session log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum SessionEvent {
    Created(CreateRequest),
    Evaluated(EvaluateRequest),
    Committed(CommitRequest),
    Ran(Scenario),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionStatus {
    Programming,
    Evaluated,
    Ran,
}

#[derive(Clone, Debug)]
pub struct Session {
    pub id: String,
    pub scene: Scene,
    pub skills: BTreeMap<String, SkillDef>,
    pub world: WorldState,
    pub robot: RobotStart,
    pub program: Vec<ProgramStep>,
    pub status: SessionStatus,
    pub evaluations: Vec<EvaluationResult>,
    pub runs: Vec<RunResult>,
    initial_scene: Scene,
}

/// Read-only summary returned by `GET /sessions/{id}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionSnapshot {
    pub id: String,
    pub status: SessionStatus,
    pub world: WorldState,
    pub skills: Vec<String>,
    pub program: Vec<ProgramStep>,
    pub scene: Scene,
}

/// Everything reportable about a session.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionReports {
    pub id: String,
    pub program: Vec<ProgramStep>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub last_evaluation: Option<EvaluationResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub last_run: Option<RunResult>,
}

impl Session {
    pub fn new(id: &str, req: &CreateRequest) -> Result<Self> {
        req.scene.validate()?;
        let mut skills = BTreeMap::new();
        for doc in &req.skills {
            let s = SkillDef::new(doc.clone())?;
            if skills.insert(s.name().to_string(), s).is_some() {
                return Err(Error::validation(format!("duplicate skill `{}`", doc.name)));
            }
        }
        let world = match &req.world {
            Some(atoms) => WorldState::from_atoms(atoms.iter().cloned())?,
            None => req.scene.initial_world()?,
        };
        Ok(Session {
            id: id.to_string(),
            scene: req.scene.clone(),
            initial_scene: req.scene.clone(),
            skills,
            world,
            robot: req.robot.clone(),
            program: Vec::new(),
            status: SessionStatus::Programming,
            evaluations: Vec::new(),
            runs: Vec::new(),
        })
    }

    pub fn skill(&self, name: &str) -> Result<&SkillDef> {
        self.skills.get(name).ok_or_else(|| Error::UnknownSkill(name.to_string()))
    }

    fn library(&self) -> Vec<SkillDef> {
        self.skills.values().cloned().collect()
    }

    /// Dependency check and quality for every matching candidate.
    pub fn evaluate(&mut self, req: &EvaluateRequest) -> Result<EvaluationResult> {
        req.validate()?;
        let skill = self.skill(&req.skill)?.clone();
        let library = self.library();
        let settings = EvalSettings {
            sampling: req.sampling(),
            policy: req.policy(),
            start: self.robot.clone(),
        };
        let mut feasible = Vec::new();
        let mut infeasible = Vec::new();
        for cand in enumerate_candidates(&self.scene, &skill, &req.filter) {
            let dependency = check_dependencies(&self.world, &skill, &cand, &self.scene, &library)?;
            let mut reasons = dependency.reasons();
            let report = if dependency.feasible {
                match evaluate_candidate(&skill, &cand, &self.scene, &settings) {
                    Ok(e) => Some(e.report),
                    Err(e @ (Error::Grounding { .. } | Error::Horizon { .. } | Error::UnknownFrame(_))) => {
                        reasons.push(e.to_string());
                        None
                    }
                    Err(e) => return Err(e),
                }
            } else {
                None
            };
            let c = CandidateResult {
                candidate: cand,
                dependency,
                report,
                reasons,
            };
            if c.feasible() {
                feasible.push(c);
            } else {
                infeasible.push(c);
            }
        }
        feasible.sort_by(|a, b| {
            compare_reports(
                a.report.as_ref().expect("feasible"),
                b.report.as_ref().expect("feasible"),
                req.criterion,
            )
        });
        let status = if feasible.is_empty() && infeasible.is_empty() {
            format!("no object matches filter `{}` for skill `{}`", req.filter, req.skill)
        } else {
            format!("{} feasible, {} infeasible", feasible.len(), infeasible.len())
        };
        feasible.extend(infeasible);
        let result = EvaluationResult {
            request: req.clone(),
            status,
            candidates: feasible,
        };
        self.evaluations.push(result.clone());
        self.status = SessionStatus::Evaluated;
        Ok(result)
    }

    /// Appends an evaluated, feasible (skill, parameter) to the program and
    /// progresses the world state by its postconditions.
    pub fn commit(&mut self, req: &CommitRequest) -> Result<ProgramStep> {
        let skill = self.skill(&req.skill)?.clone();
        let eval = self
            .evaluations
            .iter()
            .rev()
            .find(|e| e.request.skill == req.skill && e.candidate(&req.parameter).is_some())
            .ok_or_else(|| {
                Error::Infeasible(format!(
                    "{}({}) has not been evaluated since the last commit",
                    req.skill, req.parameter
                ))
            })?;
        let cand = eval.candidate(&req.parameter).expect("found above");
        let Some(report) = cand.report.clone() else {
            return Err(Error::Infeasible(format!(
                "{}({}) is infeasible: {}",
                req.skill,
                req.parameter,
                cand.reasons.join("; ")
            )));
        };
        let request = eval.request.clone();
        let opts = GroundingOptions {
            sampling: request.sampling(),
            start_time: 0.0,
            start: self.robot.clone(),
        };
        let (g, _) = ground_skill(&skill, &req.parameter, &self.scene, &opts)?;
        let binding = skill.bind(&req.parameter)?;
        let post: Vec<_> = skill.post().iter().map(|l| l.substitute(&binding)).collect();
        let step = ProgramStep {
            skill: req.skill.clone(),
            parameter: req.parameter.clone(),
            report,
            request,
            start: StepStart {
                scene: Some(self.scene.clone()),
                world: self.world.clone(),
                robot: self.robot.clone(),
            },
        };
        self.world = self.world.apply_literals(&post);
        for (obj, pose) in g.final_object_poses(&self.scene) {
            if let Some(o) = self.scene.object_mut(&obj) {
                o.pose = pose;
            }
        }
        self.robot = g.end_state();
        self.program.push(step.clone());
        self.evaluations.clear();
        self.status = SessionStatus::Programming;
        Ok(step)
    }

    /// Runs the committed program. Faults apply to the step selected by
    /// the scenario's skill/parameter (the first step when unspecified).
    pub fn run(&mut self, scenario: &Scenario) -> Result<RunResult> {
        if self.program.is_empty() {
            return Err(Error::Session("the program is empty; commit a skill first".into()));
        }
        let target = match (&scenario.skill, &scenario.parameter) {
            (None, None) => 0,
            (skill, param) => self
                .program
                .iter()
                .position(|s| {
                    skill.as_ref().map_or(true, |k| &s.skill == k) && param.as_ref().map_or(true, |p| &s.parameter == p)
                })
                .ok_or_else(|| {
                    Error::Session(format!(
                        "scenario references a skill that is not committed: {}({})",
                        skill.as_deref().unwrap_or("*"),
                        param.as_deref().unwrap_or("*")
                    ))
                })?,
        };
        let mut outcomes = Vec::new();
        let mut t = 0.0;
        let mut status = OutcomeStatus::Completed;
        for (i, step) in self.program.iter().enumerate() {
            let skill = self.skill(&step.skill)?;
            let scene = step.start.scene.as_ref().unwrap_or(&self.initial_scene);
            let sampling = scenario.sampling.clone().unwrap_or_else(|| step.request.sampling());
            let opts = GroundingOptions {
                sampling: sampling.clone(),
                start_time: t,
                start: step.start.robot.clone(),
            };
            let (g, traj) = ground_skill(skill, &step.parameter, scene, &opts)?;
            let policy = step.request.policy();
            let no_faults = Vec::new();
            let faults = if i == target { &scenario.faults } else { &no_faults };
            let sim = SimulationInput {
                scene,
                cams: &scene.cameras,
                policy: &policy,
                initial: &step.start.world,
                faults,
                observable: &scenario.observable,
                extra_atoms: &scenario.policy.retry_preconditions,
            };
            let outcome = run_skill(skill, &g, &traj, scenario, &sim, &sampling)?;
            t = outcome.t_e;
            let st = outcome.status;
            outcomes.push(outcome);
            if st != OutcomeStatus::Completed {
                status = st;
                if st != OutcomeStatus::Retried {
                    break;
                }
            }
        }
        let result = RunResult { outcomes, status, t_e: t };
        self.runs.push(result.clone());
        self.status = SessionStatus::Ran;
        Ok(result)
    }

    pub fn apply(&mut self, ev: &SessionEvent) -> Result<()> {
        match ev {
            SessionEvent::Created(_) => Err(Error::Session("session already created".into())),
            SessionEvent::Evaluated(r) => self.evaluate(r).map(|_| ()),
            SessionEvent::Committed(c) => self.commit(c).map(|_| ()),
            SessionEvent::Ran(s) => self.run(s).map(|_| ()),
        }
    }

    pub fn snapshot(&self) -> SessionSnapshot {
        SessionSnapshot {
            id: self.id.clone(),
            status: self.status,
            world: self.world.clone(),
            skills: self.skills.keys().cloned().collect(),
            program: self.program.clone(),
            scene: self.scene.clone(),
        }
    }

    pub fn reports(&self) -> SessionReports {
        SessionReports {
            id: self.id.clone(),
            program: self.program.clone(),
            last_evaluation: self.evaluations.last().cloned(),
            last_run: self.runs.last().cloned(),
        }
    }
}

/// Plain-text table of an evaluation: Q values in percent, time in seconds.
pub fn format_table(eval: &EvaluationResult) -> String {
    let mut out = format!(
        "{:<12} {:>9} {:>9} {:>9}  {}\n",
        "parameter", "Q_avg %", "Q_eoi %", "time s", "status"
    );
    for c in &eval.candidates {
        match &c.report {
            Some(r) => {
                let eoi = r.q_eoi.map_or("N/A".to_string(), |q| format!("{:.2}", q * 100.0));
                out += &format!(
                    "{:<12} {:>9.2} {:>9} {:>9.2}  feasible\n",
                    c.candidate,
                    r.q_avg * 100.0,
                    eoi,
                    r.t_total
                );
            }
            None => {
                out += &format!(
                    "{:<12} {:>9} {:>9} {:>9}  infeasible: {}\n",
                    c.candidate,
                    "N/A",
                    "N/A",
                    "N/A",
                    c.reasons.join("; ")
                );
                if !c.dependency.plan.is_empty() {
                    out += &format!("{:<12} suggested plan: {}\n", "", c.dependency.plan.join(" -> "));
                }
            }
        }
    }
    if eval.candidates.is_empty() {
        out += &format!("({})\n", eval.status);
    }
    out
}

/// Directory of session logs, one `<id>.jsonl` file per session.
#[derive(Clone, Debug)]
pub struct SessionStore {
    dir: PathBuf,
}

impl SessionStore {
    pub fn open(dir: impl AsRef<Path>) -> Result<Self> {
        fs::create_dir_all(dir.as_ref())?;
        Ok(SessionStore {
            dir: dir.as_ref().to_path_buf(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path(&self, id: &str) -> Result<PathBuf> {
        if id.is_empty() || !id.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_') {
            return Err(Error::validation(format!("invalid session id `{id}`")));
        }
        Ok(self.dir.join(format!("{id}.jsonl")))
    }

    pub fn exists(&self, id: &str) -> bool {
        self.path(id).map(|p| p.exists()).unwrap_or(false)
    }

    /// Creates a session; the id is taken from the request or generated.
    pub fn create(&self, req: &CreateRequest) -> Result<Session> {
        let id = req.id.clone().unwrap_or_else(|| ulid::Ulid::new().to_string());
        let path = self.path(&id)?;
        if path.exists() {
            return Err(Error::Session(format!("session `{id}` already exists")));
        }
        let session = Session::new(&id, req)?;
        let mut stored = req.clone();
        stored.id = Some(id.clone());
        self.write_event(&path, &SessionEvent::Created(stored), true)?;
        Ok(session)
    }

    /// Rebuilds a session by replaying its log.
    pub fn load(&self, id: &str) -> Result<Session> {
        let path = self.path(id)?;
        let file = fs::File::open(&path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::Session(format!("unknown session `{id}`")),
            _ => Error::Io(e),
        })?;
        let mut session: Option<Session> = None;
        for line in BufReader::new(file).lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let ev: SessionEvent = serde_json::from_str(&line)?;
            match (&mut session, ev) {
                (None, SessionEvent::Created(req)) => session = Some(Session::new(id, &req)?),
                (None, _) => return Err(Error::Session(format!("log of `{id}` does not start with creation"))),
                (Some(s), ev) => s.apply(&ev)?,
            }
        }
        session.ok_or_else(|| Error::Session(format!("log of `{id}` is empty")))
    }

    pub fn append(&self, id: &str, ev: &SessionEvent) -> Result<()> {
        let path = self.path(id)?;
        if !path.exists() {
            return Err(Error::Session(format!("unknown session `{id}`")));
        }
        self.write_event(&path, ev, false)
    }

    fn write_event(&self, path: &Path, ev: &SessionEvent, create: bool) -> Result<()> {
        let mut f = OpenOptions::new()
            .append(true)
            .create(create)
            .create_new(create)
            .open(path)?;
        let mut line = serde_json::to_string(ev)?;
        line.push('\n');
        f.write_all(line.as_bytes())?;
        Ok(())
    }

    /// Ids of all stored sessions, sorted.
    pub fn list(&self) -> Result<Vec<String>> {
        let mut ids = Vec::new();
        for entry in fs::read_dir(&self.dir)? {
            let p = entry?.path();
            if p.extension().is_some_and(|e| e == "jsonl") {
                if let Some(stem) = p.file_stem().and_then(|s| s.to_str()) {
                    ids.push(stem.to_string());
                }
            }
        }
        ids.sort();
        Ok(ids)
    }

    /// Loads, applies `ev`, and appends it to the log only on success.
    pub fn execute<T>(&self, id: &str, ev: SessionEvent, f: impl FnOnce(&mut Session, &SessionEvent) -> Result<T>) -> Result<T> {
        let mut s = self.load(id)?;
        let out = f(&mut s, &ev)?;
        self.append(id, &ev)?;
        Ok(out)
    }
}

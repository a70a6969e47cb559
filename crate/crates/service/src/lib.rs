//! Session operations shared by the `sensecov` command line and the HTTP
//! API. Both front ends go through [`Service`], so identical inputs give
//! identical documents.

pub mod api;
pub mod cli;

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use sensecov::monitor::Scenario;
use sensecov::reference;
use sensecov::session::{
    format_table, CommitRequest, CreateRequest, EvaluateRequest, EvaluationResult, ProgramStep, RunResult,
    SessionEvent, SessionReports, SessionSnapshot,
};
use sensecov::{Error, ErrorClass, SessionStore};

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error("unknown session `{0}`")]
    NotFound(String),
    #[error("session `{0}` already exists")]
    Exists(String),
    #[error("idempotency key was already used with a different request")]
    KeyReused,
    #[error(transparent)]
    Core(#[from] Error),
}

impl From<serde_json::Error> for ServiceError {
    fn from(e: serde_json::Error) -> Self {
        ServiceError::Core(Error::Json(e))
    }
}

impl ServiceError {
    pub fn code(&self) -> &'static str {
        match self {
            ServiceError::NotFound(_) => "not_found",
            ServiceError::Exists(_) => "exists",
            ServiceError::KeyReused => "idempotency_key_reused",
            ServiceError::Core(e) => e.code(),
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            ServiceError::NotFound(_) | ServiceError::Exists(_) | ServiceError::KeyReused => ErrorClass::Validation,
            ServiceError::Core(e) => e.class(),
        }
    }

    /// 0 success, 2 validation, 3 infeasible, 4 runtime error.
    pub fn exit_code(&self) -> u8 {
        match self.class() {
            ErrorClass::Validation => 2,
            ErrorClass::Infeasible => 3,
            ErrorClass::Runtime => 4,
        }
    }

    pub fn detail(&self) -> Value {
        let class = match self.class() {
            ErrorClass::Validation => "validation",
            ErrorClass::Infeasible => "infeasible",
            ErrorClass::Runtime => "runtime",
        };
        let mut d = json!({ "class": class });
        match self {
            ServiceError::NotFound(id) | ServiceError::Exists(id) => d["session"] = json!(id),
            ServiceError::Core(Error::Syntax { line, column, .. }) => {
                d["line"] = json!(line);
                d["column"] = json!(column);
            }
            ServiceError::Core(Error::Grounding { action, .. }) => d["action"] = json!(action),
            ServiceError::Core(Error::Horizon { frame, t }) => {
                d["frame"] = json!(frame);
                d["t"] = json!(t);
            }
            _ => {}
        }
        d
    }

    /// The `{code, message, detail}` error document.
    pub fn to_document(&self) -> Value {
        json!({ "code": self.code(), "message": self.to_string(), "detail": self.detail() })
    }
}

pub type Result<T, E = ServiceError> = std::result::Result<T, E>;

/// Body of a session creation: a bundled reference setup or a full document.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(untagged)]
pub enum CreateBody {
    Reference {
        reference: String,
        #[serde(default)]
        id: Option<String>,
    },
    Document(Box<CreateRequest>),
}

impl CreateBody {
    pub fn into_request(self) -> Result<CreateRequest> {
        match self {
            CreateBody::Reference { reference: name, id } => Ok(reference::create_request(&name, id)?),
            CreateBody::Document(req) => Ok(*req),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Service {
    store: SessionStore,
}

impl Service {
    pub fn open(dir: impl AsRef<Path>) -> Result<Self> {
        Ok(Service {
            store: SessionStore::open(dir)?,
        })
    }

    pub fn store(&self) -> &SessionStore {
        &self.store
    }

    fn require(&self, id: &str) -> Result<()> {
        if self.store.exists(id) {
            Ok(())
        } else {
            Err(ServiceError::NotFound(id.to_string()))
        }
    }

    pub fn create(&self, body: CreateBody) -> Result<SessionSnapshot> {
        let req = body.into_request()?;
        if let Some(id) = &req.id {
            if self.store.exists(id) {
                return Err(ServiceError::Exists(id.clone()));
            }
        }
        Ok(self.store.create(&req)?.snapshot())
    }

    pub fn list(&self) -> Result<Vec<String>> {
        Ok(self.store.list()?)
    }

    pub fn snapshot(&self, id: &str) -> Result<SessionSnapshot> {
        self.require(id)?;
        Ok(self.store.load(id)?.snapshot())
    }

    pub fn evaluate(&self, id: &str, req: EvaluateRequest) -> Result<EvaluationResult> {
        self.require(id)?;
        Ok(self.store.execute(id, SessionEvent::Evaluated(req.clone()), |s, _| s.evaluate(&req))?)
    }

    pub fn commit(&self, id: &str, req: CommitRequest) -> Result<ProgramStep> {
        self.require(id)?;
        Ok(self.store.execute(id, SessionEvent::Committed(req.clone()), |s, _| s.commit(&req))?)
    }

    pub fn run(&self, id: &str, scenario: Scenario) -> Result<RunResult> {
        self.require(id)?;
        Ok(self.store.execute(id, SessionEvent::Ran(scenario.clone()), |s, _| s.run(&scenario))?)
    }

    pub fn reports(&self, id: &str) -> Result<SessionReports> {
        self.require(id)?;
        Ok(self.store.load(id)?.reports())
    }
}

fn pct(q: Option<f64>) -> String {
    q.map_or("N/A".into(), |q| format!("{:.2}", q * 100.0))
}

fn opt3(t: Option<f64>) -> String {
    t.map_or("-".into(), |t| format!("{t:.3}"))
}

pub(crate) fn label<T: Serialize>(v: &T) -> String {
    serde_json::to_value(v)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_default()
}

pub fn format_step(i: usize, s: &ProgramStep) -> String {
    format!(
        "{:>3}. {}({})  Q_avg {} %  Q_eoi {} %  time {:.2} s",
        i + 1,
        s.skill,
        s.parameter,
        pct(Some(s.report.q_avg)),
        pct(s.report.q_eoi),
        s.report.t_total
    )
}

pub fn format_run(r: &RunResult) -> String {
    let mut out = format!("run {} at t_e {:.3} s\n", label(&r.status), r.t_e);
    for o in &r.outcomes {
        let _ = writeln!(
            out,
            "  {}({}): {}  t_f {}  t_r {}  t_redo {}  t_e {:.3}",
            o.skill,
            o.parameter,
            label(&o.status),
            opt3(o.t_f),
            opt3(o.t_r),
            opt3(o.t_redo),
            o.t_e
        );
        for v in o.verdicts.iter().chain(&o.retry_verdicts) {
            let _ = writeln!(out, "    {}  {}", label(&v.status), v.formula);
        }
    }
    out
}

/// Plain-text rendering of a session's reports.
pub fn format_reports(r: &SessionReports) -> String {
    let mut out = format!("session {}\n", r.id);
    if r.program.is_empty() {
        out += "program: (empty)\n";
    } else {
        out += "program:\n";
        for (i, s) in r.program.iter().enumerate() {
            out += &format_step(i, s);
            out.push('\n');
        }
    }
    if let Some(e) = &r.last_evaluation {
        let _ = writeln!(out, "\nlast evaluation: {} `{}`, {}", e.request.skill, e.request.filter, e.status);
        out += &format_table(e);
    }
    if let Some(run) = &r.last_run {
        out.push('\n');
        out += &format_run(run);
    }
    out
}

use std::fs;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use sensecov::coverage::VertexRule;
use sensecov::monitor::Scenario;
use sensecov::session::{format_table, CommitRequest, CreateRequest, EvaluateRequest};
use sensecov::skill::SkillDef;
use sensecov::{Criterion, Error, Scene};

use crate::{format_reports, format_run, format_step, CreateBody, Result, Service, ServiceError};

#[derive(Debug, Parser)]
#[command(name = "sensecov", version, about = "Sensing-quality-aware robot skill programming")]
pub struct Cli {
    /// Directory holding session logs.
    #[arg(long, global = true, env = "SENSECOV_STORE", default_value = ".sensecov")]
    pub store: PathBuf,
    /// Session to operate on; defaults to the last one created in the store.
    #[arg(long, global = true, env = "SENSECOV_SESSION")]
    pub session: Option<String>,
    /// Print JSON documents instead of tables.
    #[arg(long, global = true)]
    pub json: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Create, list and inspect sessions.
    #[command(subcommand)]
    Session(SessionCommand),
    /// Check a scene document.
    #[command(subcommand)]
    Scene(SceneCommand),
    /// Check a skill document.
    #[command(subcommand)]
    Skill(SkillCommand),
    /// Rank the candidate parameters of a skill.
    Evaluate(EvaluateArgs),
    /// Append an evaluated, feasible skill to the program.
    Commit {
        #[arg(long)]
        skill: String,
        #[arg(long)]
        parameter: String,
    },
    /// Run the committed program against a fault scenario.
    Run {
        /// Scenario document; without one the program runs fault-free.
        #[arg(long)]
        scenario: Option<PathBuf>,
    },
    /// Show the program, the last evaluation and the last run.
    Report {
        #[arg(long, value_enum, default_value_t = ReportFormat::Table)]
        format: ReportFormat,
    },
    /// Serve the HTTP API.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: SocketAddr,
    },
}

#[derive(Debug, Subcommand)]
pub enum SessionCommand {
    /// Create a session from a bundled reference setup or from documents.
    New {
        #[arg(long, conflicts_with_all = ["scene", "skills"])]
        reference: Option<String>,
        #[arg(long, required_unless_present = "reference")]
        scene: Option<PathBuf>,
        /// Skill document; repeat for a library.
        #[arg(long = "skill", requires = "scene")]
        skills: Vec<PathBuf>,
        #[arg(long)]
        id: Option<String>,
    },
    /// List stored sessions.
    List,
    /// Print the session's world state and program.
    Show,
}

#[derive(Debug, Subcommand)]
pub enum SceneCommand {
    Validate { file: PathBuf },
}

#[derive(Debug, Subcommand)]
pub enum SkillCommand {
    Validate { file: PathBuf },
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub skill: String,
    /// Category tags or object name; empty matches every object.
    #[arg(long, default_value = "")]
    pub filter: String,
    #[arg(long, default_value_t = sensecov::session::DEFAULT_MIN_N)]
    pub min_n: usize,
    /// Fixed sampling interval in seconds, instead of `min_n` per action.
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long, default_value_t = 1)]
    pub k: usize,
    #[arg(long, default_value = "lexicographic")]
    pub criterion: Criterion,
    /// Fraction of box vertices that must be seen (default: all eight).
    #[arg(long)]
    pub vertex_fraction: Option<f64>,
    #[arg(long)]
    pub no_occlusion: bool,
}

impl EvaluateArgs {
    pub fn request(&self) -> EvaluateRequest {
        let mut r = EvaluateRequest::new(&self.skill, &self.filter);
        r.min_n = self.min_n;
        r.dt = self.dt;
        r.k = self.k;
        r.criterion = self.criterion;
        r.vertex_rule = self.vertex_fraction.map(VertexRule::Fraction);
        r.occlusion = self.no_occlusion.then_some(false);
        r
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    Table,
    Doc,
}

const CURRENT: &str = "current";

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path)
        .map_err(|e| ServiceError::Core(Error::validation(format!("cannot read {}: {e}", path.display()))))
}

fn pretty<T: serde::Serialize>(v: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(v)? + "\n")
}

impl Cli {
    fn session_id(&self, svc: &Service) -> Result<String> {
        if let Some(id) = &self.session {
            return Ok(id.clone());
        }
        let current = svc.store().dir().join(CURRENT);
        match fs::read_to_string(&current) {
            Ok(id) if !id.trim().is_empty() => Ok(id.trim().to_string()),
            _ => Err(ServiceError::Core(Error::validation(
                "no session selected: pass --session or create one with `sensecov session new`",
            ))),
        }
    }

    /// Runs every command except `serve`, returning what to print.
    pub fn execute(&self) -> Result<String> {
        match &self.command {
            Command::Scene(SceneCommand::Validate { file }) => {
                let scene = Scene::from_json(&read(file)?)?;
                return Ok(format!(
                    "scene ok: {} cameras, {} objects, {} frames\n",
                    scene.cameras.len(),
                    scene.objects.len(),
                    scene.frames.len()
                ));
            }
            Command::Skill(SkillCommand::Validate { file }) => {
                let skill = SkillDef::from_json(&read(file)?)?;
                return Ok(format!(
                    "skill ok: {} with {} actions, {} requirements\n",
                    skill.name(),
                    skill.doc().actions.len(),
                    skill.doc().requirements.len()
                ));
            }
            Command::Serve { .. } => {
                return Err(ServiceError::Core(Error::validation("serve is handled by the binary")));
            }
            _ => {}
        }
        let svc = Service::open(&self.store)?;
        match &self.command {
            Command::Session(SessionCommand::New {
                reference,
                scene,
                skills,
                id,
            }) => {
                let body = match (reference, scene) {
                    (Some(name), _) => CreateBody::Reference {
                        reference: name.clone(),
                        id: id.clone(),
                    },
                    (None, Some(scene)) => {
                        let scene = Scene::from_json(&read(scene)?)?;
                        let skills = skills
                            .iter()
                            .map(|p| Ok(SkillDef::from_json(&read(p)?)?.doc().clone()))
                            .collect::<Result<Vec<_>>>()?;
                        CreateBody::Document(Box::new(CreateRequest {
                            id: id.clone(),
                            scene,
                            skills,
                            world: None,
                            robot: Default::default(),
                        }))
                    }
                    (None, None) => unreachable!("clap requires --scene or --reference"),
                };
                let snap = svc.create(body)?;
                fs::write(svc.store().dir().join(CURRENT), &snap.id).map_err(Error::Io)?;
                if self.json {
                    pretty(&snap)
                } else {
                    Ok(format!("{}\n", snap.id))
                }
            }
            Command::Session(SessionCommand::List) => {
                let ids = svc.list()?;
                if self.json {
                    pretty(&ids)
                } else {
                    Ok(ids.iter().map(|i| format!("{i}\n")).collect())
                }
            }
            Command::Session(SessionCommand::Show) => {
                let snap = svc.snapshot(&self.session_id(&svc)?)?;
                if self.json {
                    return pretty(&snap);
                }
                let mut out = format!("session {} ({})\nskills: {}\nworld:", snap.id, crate::label(&snap.status), snap.skills.join(", "));
                for a in snap.world.atoms() {
                    out += &format!(" {a}");
                }
                out.push('\n');
                for (i, s) in snap.program.iter().enumerate() {
                    out += &format_step(i, s);
                    out.push('\n');
                }
                Ok(out)
            }
            Command::Evaluate(args) => {
                let result = svc.evaluate(&self.session_id(&svc)?, args.request())?;
                if self.json {
                    pretty(&result)
                } else {
                    Ok(format!("{}\n{}", result.status, format_table(&result)))
                }
            }
            Command::Commit { skill, parameter } => {
                let id = self.session_id(&svc)?;
                let step = svc.commit(
                    &id,
                    CommitRequest {
                        skill: skill.clone(),
                        parameter: parameter.clone(),
                    },
                )?;
                if self.json {
                    pretty(&step)
                } else {
                    let n = svc.snapshot(&id)?.program.len();
                    Ok(format_step(n - 1, &step) + "\n")
                }
            }
            Command::Run { scenario } => {
                let scenario = match scenario {
                    Some(p) => Scenario::from_json(&read(p)?)?,
                    None => Scenario::default(),
                };
                let result = svc.run(&self.session_id(&svc)?, scenario)?;
                if self.json {
                    pretty(&result)
                } else {
                    Ok(format_run(&result))
                }
            }
            Command::Report { format } => {
                let reports = svc.reports(&self.session_id(&svc)?)?;
                match format {
                    ReportFormat::Doc => pretty(&reports),
                    ReportFormat::Table if self.json => pretty(&reports),
                    ReportFormat::Table => Ok(format_reports(&reports)),
                }
            }
            Command::Scene(_) | Command::Skill(_) | Command::Serve { .. } => unreachable!("handled above"),
        }
    }
}

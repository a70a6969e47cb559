//! Sensing-quality-aware robot programming.
//!
//! A skill is a sequence of primitive actions with pre/postconditions and
//! runtime requirements written in metric temporal logic. For each
//! candidate parameter the skill is grounded into a timed trajectory, and
//! every sampled skill state is checked for camera coverage of the
//! literals that must be monitored. Coverage segments give two quality
//! measures (`Q_avg` over the whole execution, `Q_eoi` over the windows
//! where faults are expected) used to rank candidates. Committed programs
//! can be run against scripted faults with a three-valued monitor that
//! stops or retries on detection.
//!
//! Module map, bottom up: [`geometry`], [`world`], [`profile`], [`mtl`],
//! [`coverage`], [`skill`], [`grounding`], [`planner`], [`quality`],
//! [`monitor`], [`session`], [`reference`].

pub mod coverage;
pub mod error;
pub mod geometry;
pub mod grounding;
pub mod monitor;
pub mod mtl;
pub mod planner;
pub mod profile;
pub mod quality;
pub mod reference;
pub mod session;
pub mod skill;
pub mod world;

pub use error::{Error, ErrorClass, Result};
pub use grounding::{ground_skill, GroundedSkill, GroundingOptions, Sampling, Trajectory};
pub use monitor::{Outcome, OutcomeStatus, Scenario};
pub use quality::{evaluate_candidate, rank_parameters, Criterion, EvalSettings, QualityReport};
pub use session::{Session, SessionStore};
pub use skill::SkillDef;
pub use world::{Atom, Literal, Scene, WorldState};

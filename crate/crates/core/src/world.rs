//! Scene geometry, the frame tree and the closed-world propositional state.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::str::FromStr;

use nalgebra::{Point3, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{rotation_x_to, Occluder, Pose};
use crate::profile::MotionProfile;

pub const WORLD_FRAME: &str = "world";
pub const BASE_FRAME: &str = "base";
pub const EE_FRAME: &str = "ee";
pub const UPPER_ARM_FRAME: &str = "upper_arm";
pub const FOREARM_FRAME: &str = "forearm";

/// Frames whose pose follows the arm configuration.
pub const ROBOT_FRAMES: [&str; 4] = [BASE_FRAME, EE_FRAME, UPPER_ARM_FRAME, FOREARM_FRAME];

// ---------------------------------------------------------------------------
// Propositional layer
// ---------------------------------------------------------------------------

/// A predicate applied to terms. Terms starting with `?` are variables.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Atom {
    pub predicate: String,
    pub args: Vec<String>,
}

impl Atom {
    pub fn new(predicate: impl Into<String>, args: &[&str]) -> Self {
        Atom {
            predicate: predicate.into(),
            args: args.iter().map(|s| s.to_string()).collect(),
        }
    }

    pub fn is_ground(&self) -> bool {
        !self.args.iter().any(|a| a.starts_with('?'))
    }

    /// Replaces variables bound in `binding`; unbound variables are kept.
    pub fn substitute(&self, binding: &BTreeMap<String, String>) -> Atom {
        Atom {
            predicate: self.predicate.clone(),
            args: self
                .args
                .iter()
                .map(|a| binding.get(a).cloned().unwrap_or_else(|| a.clone()))
                .collect(),
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.predicate)?;
        if !self.args.is_empty() {
            write!(f, "({})", self.args.join(","))?;
        }
        Ok(())
    }
}

pub(crate) fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

pub(crate) fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '-'
}

fn is_term(s: &str) -> bool {
    let body = s.strip_prefix('?').unwrap_or(s);
    !body.is_empty() && body.chars().all(is_ident_char)
}

impl FromStr for Atom {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (name, rest) = match s.find('(') {
            Some(i) => (&s[..i], Some(&s[i..])),
            None => (s, None),
        };
        let name = name.trim();
        if name.is_empty()
            || !name.starts_with(is_ident_start)
            || !name.chars().all(is_ident_char)
        {
            return Err(Error::validation(format!("malformed predicate name in `{s}`")));
        }
        let args = match rest {
            None => Vec::new(),
            Some(r) => {
                let inner = r
                    .strip_prefix('(')
                    .and_then(|r| r.strip_suffix(')'))
                    .ok_or_else(|| Error::validation(format!("unbalanced parentheses in `{s}`")))?;
                let args: Vec<String> = inner.split(',').map(|a| a.trim().to_string()).collect();
                if args.iter().any(|a| !is_term(a)) {
                    return Err(Error::validation(format!("malformed argument list in `{s}`")));
                }
                args
            }
        };
        Ok(Atom {
            predicate: name.to_string(),
            args,
        })
    }
}

impl Serialize for Atom {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Atom {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// An atom with polarity. Written `pred(args)` or `!pred(args)`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Literal {
    pub atom: Atom,
    pub positive: bool,
}

impl Literal {
    pub fn pos(atom: Atom) -> Self {
        Literal { atom, positive: true }
    }

    pub fn neg(atom: Atom) -> Self {
        Literal {
            atom,
            positive: false,
        }
    }

    pub fn negated(&self) -> Self {
        Literal {
            atom: self.atom.clone(),
            positive: !self.positive,
        }
    }

    pub fn substitute(&self, binding: &BTreeMap<String, String>) -> Literal {
        Literal {
            atom: self.atom.substitute(binding),
            positive: self.positive,
        }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.positive {
            f.write_str("!")?;
        }
        write!(f, "{}", self.atom)
    }
}

impl FromStr for Literal {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s.strip_prefix('!') {
            Some(rest) => Ok(Literal::neg(rest.parse()?)),
            None => Ok(Literal::pos(s.parse()?)),
        }
    }
}

impl Serialize for Literal {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Literal {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Closed-world state: the set of true ground atoms.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct WorldState {
    atoms: BTreeSet<Atom>,
}

impl WorldState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_atoms(atoms: impl IntoIterator<Item = Atom>) -> Result<Self> {
        let atoms: BTreeSet<Atom> = atoms.into_iter().collect();
        if let Some(a) = atoms.iter().find(|a| !a.is_ground()) {
            return Err(Error::validation(format!("world state atom `{a}` is not ground")));
        }
        Ok(WorldState { atoms })
    }

    pub fn contains(&self, atom: &Atom) -> bool {
        self.atoms.contains(atom)
    }

    pub fn atoms(&self) -> impl Iterator<Item = &Atom> {
        self.atoms.iter()
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// STRIPS progression: `(self ∖ delete) ∪ add`.
    pub fn progress<'a>(
        &self,
        add: impl IntoIterator<Item = &'a Atom>,
        delete: impl IntoIterator<Item = &'a Atom>,
    ) -> WorldState {
        let mut atoms = self.atoms.clone();
        for a in delete {
            atoms.remove(a);
        }
        for a in add {
            atoms.insert(a.clone());
        }
        WorldState { atoms }
    }

    /// Applies literals as effects: positives are added, negatives removed.
    pub fn apply_literals<'a>(&self, effects: impl IntoIterator<Item = &'a Literal>) -> WorldState {
        let (add, del): (Vec<&Literal>, Vec<&Literal>) =
            effects.into_iter().partition(|l| l.positive);
        self.progress(add.iter().map(|l| &l.atom), del.iter().map(|l| &l.atom))
    }
}

/// Truth of a ground literal under the closed-world assumption.
pub fn holds(state: &WorldState, literal: &Literal) -> Result<bool> {
    if !literal.atom.is_ground() {
        return Err(Error::validation(format!("literal `{literal}` is not ground")));
    }
    Ok(state.contains(&literal.atom) == literal.positive)
}

// ---------------------------------------------------------------------------
// Geometry layer
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoseSample {
    pub t: f64,
    pub pose: Pose,
}

/// Pose of a frame relative to its parent as a function of time.
#[derive(Clone, Debug, PartialEq)]
pub enum PoseFn {
    Static(Pose),
    /// Timestamped samples, interpolated linearly in position and
    /// spherically in orientation. Defined on `[first.t, last.t]`.
    Sampled(Vec<PoseSample>),
}

impl PoseFn {
    pub fn at(&self, frame: &str, t: f64) -> Result<Pose> {
        if !t.is_finite() || t < 0.0 {
            return Err(Error::Horizon {
                frame: frame.to_string(),
                t,
            });
        }
        match self {
            PoseFn::Static(p) => Ok(*p),
            PoseFn::Sampled(samples) => {
                const EPS: f64 = 1e-9;
                let first = samples.first().expect("validated non-empty");
                let last = samples.last().expect("validated non-empty");
                if t < first.t - EPS || t > last.t + EPS {
                    return Err(Error::Horizon {
                        frame: frame.to_string(),
                        t,
                    });
                }
                let i = samples.partition_point(|s| s.t <= t);
                if i == 0 {
                    return Ok(first.pose);
                }
                if i >= samples.len() {
                    return Ok(last.pose);
                }
                let (a, b) = (&samples[i - 1], &samples[i]);
                let s = (t - a.t) / (b.t - a.t);
                Ok(a.pose.interpolate(&b.pose, s))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FrameDoc {
    name: String,
    #[serde(default = "world_name")]
    parent: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pose: Option<Pose>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    samples: Option<Vec<PoseSample>>,
}

fn world_name() -> String {
    WORLD_FRAME.to_string()
}

/// A named frame in the scene tree.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FrameDoc", into = "FrameDoc")]
pub struct Frame {
    pub name: String,
    /// Parent frame name; `world` for the root.
    pub parent: String,
    pub pose_fn: PoseFn,
}

impl TryFrom<FrameDoc> for Frame {
    type Error = Error;

    fn try_from(doc: FrameDoc) -> Result<Self> {
        let pose_fn = match (doc.pose, doc.samples) {
            (Some(p), None) => PoseFn::Static(p),
            (None, Some(s)) => {
                if s.is_empty() {
                    return Err(Error::validation(format!("frame `{}` has no samples", doc.name)));
                }
                if s.windows(2).any(|w| w[1].t <= w[0].t) || s.iter().any(|x| !x.t.is_finite()) {
                    return Err(Error::validation(format!(
                        "frame `{}` samples must have strictly increasing times",
                        doc.name
                    )));
                }
                PoseFn::Sampled(s)
            }
            (None, None) => PoseFn::Static(Pose::identity()),
            (Some(_), Some(_)) => {
                return Err(Error::validation(format!(
                    "frame `{}` has both `pose` and `samples`",
                    doc.name
                )))
            }
        };
        Ok(Frame {
            name: doc.name,
            parent: doc.parent,
            pose_fn,
        })
    }
}

impl From<Frame> for FrameDoc {
    fn from(f: Frame) -> Self {
        let (pose, samples) = match f.pose_fn {
            PoseFn::Static(p) => (Some(p), None),
            PoseFn::Sampled(s) => (None, Some(s)),
        };
        FrameDoc {
            name: f.name,
            parent: f.parent,
            pose,
            samples,
        }
    }
}

/// Pinhole camera with a symmetric frustum; optical axis is camera +z.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraSpec {
    pub name: String,
    pub extrinsic: Pose,
    pub hfov: f64,
    pub vfov: f64,
    pub near: f64,
    pub far: f64,
}

impl CameraSpec {
    pub fn validate(&self) -> Result<()> {
        let pi = std::f64::consts::PI;
        if !(self.near > 0.0 && self.near < self.far && self.far.is_finite()) {
            return Err(Error::validation(format!(
                "camera `{}`: need 0 < near < far",
                self.name
            )));
        }
        for (label, v) in [("hfov", self.hfov), ("vfov", self.vfov)] {
            if !(v > 0.0 && v < pi) {
                return Err(Error::validation(format!(
                    "camera `{}`: {label} must lie in (0, π)",
                    self.name
                )));
            }
        }
        Ok(())
    }

    pub fn origin(&self) -> Point3<f64> {
        Point3::from(self.extrinsic.position())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneObject {
    pub name: String,
    /// Type tags, e.g. `["green", "cube"]`.
    #[serde(default)]
    pub category: Vec<String>,
    pub pose: Pose,
    /// Half sizes along the object's local axes, meters.
    pub extent: [f64; 3],
    #[serde(default)]
    pub graspable: bool,
    /// Ground atoms true about this object in the initial world state.
    #[serde(default)]
    pub facts: Vec<Atom>,
}

impl SceneObject {
    pub fn has_tag(&self, tag: &str) -> bool {
        self.category.iter().any(|c| c.eq_ignore_ascii_case(tag))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum LinkShape {
    Capsule {
        a: [f64; 3],
        b: [f64; 3],
        radius: f64,
    },
    Box {
        #[serde(default)]
        center: [f64; 3],
        half_extents: [f64; 3],
    },
}

/// An occluder primitive rigidly attached to a frame.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinkSpec {
    pub frame: String,
    #[serde(flatten)]
    pub shape: LinkShape,
}

impl LinkSpec {
    pub fn to_world(&self, frame_pose: &Pose) -> Occluder {
        match &self.shape {
            LinkShape::Capsule { a, b, radius } => Occluder::Capsule {
                a: frame_pose.transform_point(&Point3::from(*a)),
                b: frame_pose.transform_point(&Point3::from(*b)),
                radius: *radius,
            },
            LinkShape::Box {
                center,
                half_extents,
            } => Occluder::Box {
                pose: frame_pose.compose(&Pose::from_translation(Vector3::from(*center))),
                half_extents: Vector3::from(*half_extents),
            },
        }
    }
}

fn default_dwell() -> f64 {
    0.5
}

/// Desk-scale arm: a shoulder above the base, two rigid segments and the
/// end effector. Link frames follow from the end-effector position by a
/// closed-form elbow-up solution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobotModel {
    pub base: Pose,
    pub shoulder_height: f64,
    pub upper_arm: f64,
    pub forearm: f64,
    /// `[reach_min, reach_max]`, measured from the base origin.
    pub reach: [f64; 2],
    /// End-effector home position, world frame.
    pub home: [f64; 3],
    pub profile: MotionProfile,
    /// Duration of motionless actions (grasp, release), seconds.
    #[serde(default = "default_dwell")]
    pub dwell: f64,
    #[serde(default)]
    pub links: Vec<LinkSpec>,
    #[serde(default)]
    pub facts: Vec<Atom>,
}

/// Arm configuration for one end-effector position.
#[derive(Clone, Debug, PartialEq)]
pub struct ArmPose {
    /// `[base yaw, shoulder pitch, elbow flexion]`, radians.
    pub joints: [f64; 3],
    pub upper_arm: Pose,
    pub forearm: Pose,
    pub ee: Pose,
}

impl RobotModel {
    pub fn reach_min(&self) -> f64 {
        self.reach[0]
    }

    pub fn reach_max(&self) -> f64 {
        self.reach[1]
    }

    pub fn home(&self) -> Vector3<f64> {
        Vector3::from(self.home)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.reach[0] >= 0.0 && self.reach[0] < self.reach[1]) {
            return Err(Error::validation("robot: need 0 <= reach_min < reach_max"));
        }
        if !(self.upper_arm > 0.0 && self.forearm > 0.0 && self.shoulder_height >= 0.0) {
            return Err(Error::validation("robot: link lengths must be positive"));
        }
        if !(self.dwell > 0.0 && self.dwell.is_finite()) {
            return Err(Error::validation("robot: dwell must be positive"));
        }
        self.profile.validate()?;
        for l in &self.links {
            match &l.shape {
                LinkShape::Capsule { radius, .. } if *radius <= 0.0 => {
                    return Err(Error::validation("robot: capsule radius must be positive"))
                }
                LinkShape::Box { half_extents, .. } if half_extents.iter().any(|h| *h <= 0.0) => {
                    return Err(Error::validation("robot: box half extents must be positive"))
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// Closed-form arm pose placing the end effector at `ee`.
    pub fn arm_pose(&self, ee: &Vector3<f64>) -> ArmPose {
        let up = self.base.transform_vector(&Vector3::z());
        let shoulder = self.base.transform_point(&Point3::new(0.0, 0.0, self.shoulder_height)).coords;
        let (l1, l2) = (self.upper_arm, self.forearm);
        let to_wrist = ee - shoulder;
        let raw = to_wrist.norm();
        let u = if raw > 1e-12 { to_wrist / raw } else { up };
        let d = raw.clamp((l1 - l2).abs() + 1e-9, l1 + l2 - 1e-9);
        let mut v = up - u * up.dot(&u);
        if v.norm() < 1e-9 {
            v = self.base.transform_vector(&Vector3::x());
            v -= u * v.dot(&u);
        }
        let v = v.normalize();
        let cos_a = ((l1 * l1 + d * d - l2 * l2) / (2.0 * l1 * d)).clamp(-1.0, 1.0);
        let alpha = cos_a.acos();
        let elbow = shoulder + (u * cos_a + v * alpha.sin()) * l1;

        let upper_dir = (elbow - shoulder) / l1;
        let fore = ee - elbow;
        let fore_dir = if fore.norm() > 1e-12 { fore.normalize() } else { u };

        let local = self.base.inverse();
        let u_local = local.transform_vector(&upper_dir);
        let yaw = u_local.y.atan2(u_local.x);
        let pitch = u_local.z.clamp(-1.0, 1.0).asin();
        let flex = std::f64::consts::PI - upper_dir.dot(&fore_dir).clamp(-1.0, 1.0).acos();

        ArmPose {
            joints: [yaw, pitch, std::f64::consts::PI - flex],
            upper_arm: Pose::new(shoulder, rotation_x_to(&upper_dir)),
            forearm: Pose::new(elbow, rotation_x_to(&fore_dir)),
            ee: Pose::new(*ee, self.base.orientation()),
        }
    }

    /// World poses of the robot frames with the end effector at `ee`.
    pub fn frame_poses(&self, ee: &Vector3<f64>) -> BTreeMap<String, Pose> {
        let arm = self.arm_pose(ee);
        BTreeMap::from([
            (BASE_FRAME.to_string(), self.base),
            (EE_FRAME.to_string(), arm.ee),
            (UPPER_ARM_FRAME.to_string(), arm.upper_arm),
            (FOREARM_FRAME.to_string(), arm.forearm),
        ])
    }
}

/// Scene document: cameras, manipulable objects, the robot and extra frames.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scene {
    pub cameras: Vec<CameraSpec>,
    pub objects: Vec<SceneObject>,
    pub robot: RobotModel,
    #[serde(default)]
    pub frames: Vec<Frame>,
}

impl Scene {
    pub fn from_json(text: &str) -> Result<Self> {
        let scene: Scene = serde_json::from_str(text)?;
        scene.validate()?;
        Ok(scene)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scene serialises")
    }

    pub fn validate(&self) -> Result<()> {
        for c in &self.cameras {
            c.validate()?;
        }
        self.robot.validate()?;
        let mut names: HashSet<&str> = HashSet::new();
        names.insert(WORLD_FRAME);
        for r in ROBOT_FRAMES {
            names.insert(r);
        }
        for o in &self.objects {
            if o.extent.iter().any(|e| !(*e > 0.0)) {
                return Err(Error::validation(format!("object `{}`: extents must be > 0", o.name)));
            }
            if !names.insert(&o.name) {
                return Err(Error::validation(format!("duplicate frame name `{}`", o.name)));
            }
        }
        for f in &self.frames {
            if !names.insert(&f.name) {
                return Err(Error::validation(format!("duplicate frame name `{}`", f.name)));
            }
        }
        let mut cams = HashSet::new();
        for c in &self.cameras {
            if !cams.insert(&c.name) {
                return Err(Error::validation(format!("duplicate camera name `{}`", c.name)));
            }
        }
        // Parents must exist and the graph must be acyclic.
        for f in &self.frames {
            if !names.contains(f.parent.as_str()) {
                return Err(Error::validation(format!(
                    "frame `{}` has unknown parent `{}`",
                    f.name, f.parent
                )));
            }
            let mut seen = HashSet::new();
            let mut cur = f;
            while seen.insert(cur.name.as_str()) {
                match self.frames.iter().find(|g| g.name == cur.parent) {
                    Some(p) => cur = p,
                    None => break,
                }
            }
            if seen.contains(cur.parent.as_str()) || cur.parent == f.name {
                return Err(Error::validation(format!("frame `{}` is part of a cycle", f.name)));
            }
        }
        for l in &self.robot.links {
            if !names.contains(l.frame.as_str()) {
                return Err(Error::validation(format!(
                    "robot link bound to unknown frame `{}`",
                    l.frame
                )));
            }
        }
        Ok(())
    }

    pub fn object(&self, name: &str) -> Option<&SceneObject> {
        self.objects.iter().find(|o| o.name == name)
    }

    pub fn object_mut(&mut self, name: &str) -> Option<&mut SceneObject> {
        self.objects.iter_mut().find(|o| o.name == name)
    }

    pub fn frame(&self, name: &str) -> Option<&Frame> {
        self.frames.iter().find(|f| f.name == name)
    }

    pub fn has_frame(&self, name: &str) -> bool {
        name == WORLD_FRAME
            || ROBOT_FRAMES.contains(&name)
            || self.object(name).is_some()
            || self.frame(name).is_some()
    }

    /// Initial world state from object and robot facts.
    pub fn initial_world(&self) -> Result<WorldState> {
        WorldState::from_atoms(
            self.objects
                .iter()
                .flat_map(|o| o.facts.iter().cloned())
                .chain(self.robot.facts.iter().cloned()),
        )
    }

    /// A view of the frame tree at time `t` with the robot at home.
    pub fn view_at(&self, t: f64) -> FrameView<'_> {
        FrameView {
            scene: self,
            t,
            overrides: None,
        }
    }
}

/// The frame tree at one instant, optionally with world-frame pose
/// overrides (robot links and attached objects from a trajectory sample).
#[derive(Clone, Copy)]
pub struct FrameView<'a> {
    scene: &'a Scene,
    t: f64,
    overrides: Option<&'a BTreeMap<String, Pose>>,
}

impl<'a> FrameView<'a> {
    pub fn new(scene: &'a Scene, t: f64, overrides: &'a BTreeMap<String, Pose>) -> Self {
        FrameView {
            scene,
            t,
            overrides: Some(overrides),
        }
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn scene(&self) -> &'a Scene {
        self.scene
    }

    /// World pose of `frame`, composed along the tree.
    pub fn world_pose(&self, frame: &str) -> Result<Pose> {
        self.resolve(frame, 0)
    }

    fn resolve(&self, frame: &str, depth: usize) -> Result<Pose> {
        if depth > 256 {
            return Err(Error::validation(format!("frame `{frame}` nests too deeply")));
        }
        if let Some(p) = self.overrides.and_then(|o| o.get(frame)) {
            return Ok(*p);
        }
        if frame == WORLD_FRAME {
            if !self.t.is_finite() || self.t < 0.0 {
                return Err(Error::Horizon {
                    frame: frame.to_string(),
                    t: self.t,
                });
            }
            return Ok(Pose::identity());
        }
        if let Some(o) = self.scene.object(frame) {
            return Ok(o.pose);
        }
        if ROBOT_FRAMES.contains(&frame) {
            let home = self.scene.robot.home();
            return Ok(self.scene.robot.frame_poses(&home)[frame]);
        }
        let f = self
            .scene
            .frame(frame)
            .ok_or_else(|| Error::UnknownFrame(frame.to_string()))?;
        let local = f.pose_fn.at(&f.name, self.t)?;
        let parent = self.resolve(&f.parent, depth + 1)?;
        Ok(parent.compose(&local))
    }

    /// World-space occluders of every robot link, skipping links bound to
    /// any frame in `exclude_frames`.
    pub fn occluders(&self, exclude_frames: &BTreeSet<&str>) -> Result<Vec<Occluder>> {
        self.scene
            .robot
            .links
            .iter()
            .filter(|l| !exclude_frames.contains(l.frame.as_str()))
            .map(|l| Ok(l.to_world(&self.world_pose(&l.frame)?)))
            .collect()
    }
}

/// World pose of `frame` at time `t`, robot at home.
pub fn resolve_frame(scene: &Scene, frame: &str, t: f64) -> Result<Pose> {
    scene.view_at(t).world_pose(frame)
}

/// Convenience for tests and documents: a rotation about z.
pub fn yaw(angle: f64) -> UnitQuaternion<f64> {
    UnitQuaternion::from_euler_angles(0.0, 0.0, angle)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    pub(crate) fn minimal_scene() -> Scene {
        Scene::from_json(
            r#"{
              "cameras": [],
              "objects": [],
              "robot": {
                "base": {"position": [0, 0, 0]},
                "shoulder_height": 0.3, "upper_arm": 0.4, "forearm": 0.4,
                "reach": [0.1, 0.8], "home": [0.3, 0, 0.4],
                "profile": {"kind": "trapezoid", "vmax": 0.2, "amax": 0.5}
              },
              "frames": [
                {"name": "parent", "pose": {"position": [0, 0, 0], "rpy": [0, 0, 1.5707963267948966]}},
                {"name": "child", "parent": "parent", "pose": {"position": [1, 0, 0]}},
                {"name": "slide", "samples": [
                  {"t": 0, "pose": {"position": [0, 0, 0]}},
                  {"t": 2, "pose": {"position": [2, 0, 0]}}
                ]}
              ]
            }"#,
        )
        .unwrap()
    }

    #[test]
    fn world_frame_is_identity() {
        let s = minimal_scene();
        assert_eq!(resolve_frame(&s, "world", 3.0).unwrap(), Pose::identity());
    }

    #[test]
    fn grandchild_composes_through_rotation() {
        let s = minimal_scene();
        let p = resolve_frame(&s, "child", 0.0).unwrap();
        assert!((p.position() - Vector3::new(0.0, 1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn sampled_frame_interpolates_and_bounds_horizon() {
        let s = minimal_scene();
        let p = resolve_frame(&s, "slide", 0.5).unwrap();
        assert!((p.position().x - 0.5).abs() < 1e-12);
        assert!(matches!(resolve_frame(&s, "slide", 2.5), Err(Error::Horizon { .. })));
        assert!(matches!(resolve_frame(&s, "nope", 0.0), Err(Error::UnknownFrame(_))));
    }

    #[test]
    fn unknown_scene_key_is_named() {
        let err = Scene::from_json(r#"{"cameras": [], "lights": []}"#).unwrap_err();
        assert!(err.to_string().contains("lights"), "{err}");
    }

    #[test]
    fn cycle_rejected() {
        let mut s = minimal_scene();
        s.frames[0].parent = "child".into();
        assert!(s.validate().is_err());
    }

    #[test]
    fn holds_closed_world() {
        let w = WorldState::from_atoms(["on(a,table)".parse::<Atom>().unwrap()]).unwrap();
        assert!(holds(&w, &"on(a,table)".parse().unwrap()).unwrap());
        assert!(holds(&w, &"!hold(a)".parse().unwrap()).unwrap());
        assert!(!holds(&WorldState::new(), &"open".parse().unwrap()).unwrap());
        assert!(holds(&w, &"hold(?x)".parse().unwrap()).is_err());
    }

    #[test]
    fn literal_text_round_trip() {
        for s in ["open", "!hold(a)", "on(a,table)", "at(?x,b)"] {
            let l: Literal = s.parse().unwrap();
            assert_eq!(l.to_string(), s);
        }
        assert!("on(a".parse::<Literal>().is_err());
        assert!("9x".parse::<Literal>().is_err());
    }

    #[test]
    fn arm_chain_reaches_target() {
        let s = minimal_scene();
        let target = Vector3::new(0.5, 0.1, 0.1);
        let arm = s.robot.arm_pose(&target);
        let wrist = arm.forearm.transform_point(&Point3::new(s.robot.forearm, 0.0, 0.0));
        assert!((wrist.coords - target).norm() < 1e-6);
        let elbow = arm.upper_arm.transform_point(&Point3::new(s.robot.upper_arm, 0.0, 0.0));
        assert!((elbow.coords - arm.forearm.position()).norm() < 1e-9);
        // Elbow-up.
        assert!(elbow.z > 0.3);
        let _ = FRAC_PI_2;
    }
}

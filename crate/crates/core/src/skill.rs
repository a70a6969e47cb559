//! Skill documents: parameters, PDDL-style pre/postconditions, the ordered
//! primitive actions and the sensing requirements attached to them.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::{Unit, Vector3};
use serde::{Deserialize, Serialize};

use crate::coverage::{BoundingBoxSet, BoxSetSpec, FrameBox};
use crate::error::{Error, Result};
use crate::geometry::BoundingBox;
use crate::mtl::{extract_propositions, parse_mtl_with_labels, Formula, TimePoint};
use crate::world::{Atom, Literal, Scene, SceneObject};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Param {
    /// Variable name, `?`-prefixed.
    pub name: String,
    /// Object type: a category tag, `graspable`, or `object` for any.
    #[serde(rename = "type", default = "any_object")]
    pub kind: String,
}

fn any_object() -> String {
    "object".into()
}

impl Param {
    pub fn accepts(&self, obj: &SceneObject) -> bool {
        match self.kind.as_str() {
            "object" => true,
            "graspable" => obj.graspable || obj.has_tag("graspable"),
            tag => obj.has_tag(tag),
        }
    }
}

/// What the end effector does during one primitive action.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Motion {
    /// Straight line to a frame origin plus a world-axis offset.
    MoveTo {
        target: String,
        #[serde(default)]
        offset: [f64; 3],
    },
    /// Straight line to a fixed world point.
    MoveToPoint([f64; 3]),
    /// Relative straight-line move in world axes.
    MoveBy([f64; 3]),
    /// Back to the robot's home position.
    Home,
    /// Attach an object to the end effector (motionless).
    Grasp(String),
    /// Detach an object (motionless).
    Release(String),
    /// Motionless for the given number of seconds.
    Dwell(f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrimitiveAction {
    pub name: String,
    pub motion: Motion,
    /// Literals that become true at the action's end.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub effects: Vec<Literal>,
}

/// Skill document as written on disk.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SkillDoc {
    pub name: String,
    #[serde(default)]
    pub params: Vec<Param>,
    #[serde(default)]
    pub pre: Vec<Literal>,
    #[serde(default)]
    pub post: Vec<Literal>,
    pub actions: Vec<PrimitiveAction>,
    #[serde(default)]
    pub requirements: Vec<String>,
    #[serde(default)]
    pub box_sets: BTreeMap<String, BoxSetSpec>,
    /// Atom pattern (as written in formulas) → box set id.
    #[serde(default)]
    pub bindings: BTreeMap<String, String>,
}

/// A validated skill.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SkillDoc", into = "SkillDoc")]
pub struct SkillDef {
    doc: SkillDoc,
    formulas: Vec<Formula>,
    bindings: BTreeMap<Atom, String>,
}

impl TryFrom<SkillDoc> for SkillDef {
    type Error = Error;

    fn try_from(doc: SkillDoc) -> Result<Self> {
        SkillDef::new(doc)
    }
}

impl From<SkillDef> for SkillDoc {
    fn from(s: SkillDef) -> Self {
        s.doc
    }
}

impl SkillDef {
    pub fn from_json(text: &str) -> Result<Self> {
        let doc: SkillDoc = serde_json::from_str(text)?;
        SkillDef::new(doc)
    }

    pub fn new(doc: SkillDoc) -> Result<Self> {
        let fail = |m: String| Err(Error::validation(format!("skill `{}`: {m}", doc.name)));
        if doc.actions.is_empty() {
            return fail("needs at least one action".into());
        }
        let labels: Vec<&str> = doc.actions.iter().map(|a| a.name.as_str()).collect();
        let unique: BTreeSet<&str> = labels.iter().copied().collect();
        if unique.len() != labels.len() {
            return fail("action names must be unique".into());
        }
        let vars: BTreeSet<&str> = doc.params.iter().map(|p| p.name.as_str()).collect();
        if vars.len() != doc.params.len() {
            return fail("parameter names must be unique".into());
        }
        if let Some(p) = doc.params.iter().find(|p| !p.name.starts_with('?')) {
            return fail(format!("parameter `{}` must start with `?`", p.name));
        }
        let check_vars = |atom: &Atom| -> Result<()> {
            match atom.args.iter().find(|a| a.starts_with('?') && !vars.contains(a.as_str())) {
                Some(v) => Err(Error::validation(format!(
                    "skill `{}`: undeclared variable `{v}` in `{atom}`",
                    doc.name
                ))),
                None => Ok(()),
            }
        };
        for l in doc.pre.iter().chain(&doc.post).chain(doc.actions.iter().flat_map(|a| &a.effects)) {
            check_vars(&l.atom)?;
        }

        let formulas = doc
            .requirements
            .iter()
            .map(|r| parse_mtl_with_labels(r, &labels))
            .collect::<Result<Vec<_>>>()?;

        let mut bindings = BTreeMap::new();
        for (pattern, set) in &doc.bindings {
            let atom: Atom = pattern.parse()?;
            check_vars(&atom)?;
            if !doc.box_sets.contains_key(set) {
                return fail(format!("binding `{pattern}` names unknown box set `{set}`"));
            }
            bindings.insert(atom, set.clone());
        }
        for f in &formulas {
            for atom in extract_propositions(f) {
                check_vars(&atom)?;
                if !bindings.contains_key(&atom) {
                    return fail(format!("proposition `{atom}` has no target binding"));
                }
            }
        }
        for (id, set) in &doc.box_sets {
            if set.boxes.is_empty() {
                return fail(format!("box set `{id}` is empty"));
            }
            set.detection.validate()?;
            for b in &set.boxes {
                if b.vertices.is_some() && (b.center.is_some() || b.half_extents.is_some()) {
                    return fail(format!("box in `{id}` mixes `vertices` with `center`/`half_extents`"));
                }
                if b.center.is_some() && b.half_extents.is_none() {
                    return fail(format!("box in `{id}` has `center` but no `half_extents`"));
                }
                if let Some(h) = b.half_extents {
                    if h.iter().any(|x| *x <= 0.0) {
                        return fail(format!("box in `{id}` has non-positive half extents"));
                    }
                }
                if let Some(a) = b.axis {
                    if Vector3::from(a).norm() < 1e-12 {
                        return fail(format!("box in `{id}` has a zero detection axis"));
                    }
                }
            }
        }
        for a in &doc.actions {
            if let Motion::Dwell(d) = a.motion {
                if !(d > 0.0 && d.is_finite()) {
                    return fail(format!("action `{}` needs a positive dwell", a.name));
                }
            }
        }
        Ok(SkillDef {
            doc,
            formulas,
            bindings,
        })
    }

    pub fn name(&self) -> &str {
        &self.doc.name
    }

    pub fn doc(&self) -> &SkillDoc {
        &self.doc
    }

    pub fn params(&self) -> &[Param] {
        &self.doc.params
    }

    pub fn actions(&self) -> &[PrimitiveAction] {
        &self.doc.actions
    }

    pub fn action_index(&self, name: &str) -> Option<usize> {
        self.doc.actions.iter().position(|a| a.name == name)
    }

    pub fn pre(&self) -> &[Literal] {
        &self.doc.pre
    }

    pub fn post(&self) -> &[Literal] {
        &self.doc.post
    }

    pub fn formulas(&self) -> &[Formula] {
        &self.formulas
    }

    pub fn requirement_texts(&self) -> &[String] {
        &self.doc.requirements
    }

    /// Box set id bound to a (possibly non-ground) atom pattern.
    pub fn binding(&self, atom: &Atom) -> Option<&str> {
        self.bindings.get(atom).map(String::as_str)
    }

    pub fn bindings(&self) -> &BTreeMap<Atom, String> {
        &self.bindings
    }

    /// Binds the skill's first parameter to `object`.
    pub fn bind(&self, object: &str) -> Result<BTreeMap<String, String>> {
        match self.doc.params.as_slice() {
            [] => Ok(BTreeMap::new()),
            [p] => Ok(BTreeMap::from([(p.name.clone(), object.to_string())])),
            _ => Err(Error::validation(format!(
                "skill `{}` has several parameters; supply a full binding",
                self.doc.name
            ))),
        }
    }

    /// Resolves box set `id` against `scene` with variables substituted.
    pub fn box_set(&self, id: &str, binding: &BTreeMap<String, String>, scene: &Scene) -> Result<BoundingBoxSet> {
        let spec = self
            .doc
            .box_sets
            .get(id)
            .ok_or_else(|| Error::validation(format!("unknown box set `{id}`")))?;
        let mut boxes = Vec::with_capacity(spec.boxes.len());
        for b in &spec.boxes {
            let frame = binding.get(&b.frame).cloned().unwrap_or_else(|| b.frame.clone());
            if !scene.has_frame(&frame) {
                return Err(Error::UnknownFrame(frame));
            }
            let bbox = if let Some(v) = b.vertices {
                BoundingBox {
                    vertices: v.map(nalgebra::Point3::from),
                }
            } else if let Some(h) = b.half_extents {
                BoundingBox::from_center_half_extents(
                    Vector3::from(b.center.unwrap_or_default()),
                    Vector3::from(h),
                )
            } else {
                let obj = scene.object(&frame).ok_or_else(|| {
                    Error::validation(format!(
                        "box in `{id}` has no geometry and frame `{frame}` is not an object"
                    ))
                })?;
                BoundingBox::from_center_half_extents(Vector3::zeros(), Vector3::from(obj.extent))
            };
            boxes.push(FrameBox {
                frame,
                bbox,
                axis: b.axis.map(|a| Unit::new_normalize(Vector3::from(a))),
            });
        }
        BoundingBoxSet::new(id, boxes, spec.detection)
    }

    /// Every symbolic time point referenced by the requirements.
    pub fn time_points(&self) -> Vec<&TimePoint> {
        self.formulas
            .iter()
            .flat_map(|f| f.temporal_nodes())
            .flat_map(|(i, _, _)| [&i.lo, &i.hi])
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const PICK: &str = r#"{
      "name": "pickup",
      "params": [{"name": "?obj", "type": "graspable"}],
      "pre": ["on_table(?obj)", "gripper_empty"],
      "post": ["hold(?obj)", "!on_table(?obj)", "!gripper_empty"],
      "actions": [
        {"name": "a1", "motion": {"move_to": {"target": "?obj", "offset": [0, 0, 0.05]}}},
        {"name": "a2", "motion": {"move_by": [0, 0, -0.02]}},
        {"name": "a3", "motion": {"grasp": "?obj"}, "effects": ["hold(?obj)", "!on_table(?obj)"]},
        {"name": "a4", "motion": {"move_by": [0, 0, 0.1]}},
        {"name": "a5", "motion": "home"}
      ],
      "requirements": [
        "G[a1.ts,a2.te](!hold(?obj) & on_table(?obj))",
        "F[a4.ts,a4.te](!hold(?obj) & on_table(?obj))"
      ],
      "box_sets": {
        "markers": {"boxes": [{"frame": "ee", "center": [0, 0.02, 0], "half_extents": [0.01, 0.001, 0.01]}]},
        "target": {"boxes": [{"frame": "?obj"}]}
      },
      "bindings": {"hold(?obj)": "markers", "on_table(?obj)": "target"}
    }"#;

    #[test]
    fn loads_pickup() {
        let s = SkillDef::from_json(PICK).unwrap();
        assert_eq!(s.actions().len(), 5);
        assert_eq!(s.formulas().len(), 2);
        assert_eq!(s.binding(&"hold(?obj)".parse().unwrap()), Some("markers"));
        assert_eq!(s.time_points().len(), 4);
    }

    #[test]
    fn missing_binding_rejected() {
        let bad = PICK.replace(r#""hold(?obj)": "markers", "#, "");
        let err = SkillDef::from_json(&bad).unwrap_err();
        assert!(err.to_string().contains("hold(?obj)"), "{err}");
    }

    #[test]
    fn unknown_label_rejected() {
        let bad = PICK.replace("F[a4.ts,a4.te]", "F[a7.ts,a4.te]");
        assert!(matches!(SkillDef::from_json(&bad), Err(Error::UnknownActionLabel(_))));
    }

    #[test]
    fn undeclared_variable_rejected() {
        let bad = PICK.replace(r#""pre": ["on_table(?obj)""#, r#""pre": ["on_table(?other)""#);
        assert!(SkillDef::from_json(&bad).is_err());
    }

    #[test]
    fn unknown_key_rejected() {
        let bad = PICK.replacen(r#""name": "pickup","#, r#""name": "pickup", "colour": 1,"#, 1);
        let err = SkillDef::from_json(&bad).unwrap_err();
        assert!(err.to_string().contains("colour"), "{err}");
    }

    #[test]
    fn serde_round_trip_keeps_document() {
        let s = SkillDef::from_json(PICK).unwrap();
        let text = serde_json::to_string(&s).unwrap();
        let back: SkillDef = serde_json::from_str(&text).unwrap();
        assert_eq!(s, back);
    }
}

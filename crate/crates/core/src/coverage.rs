//! Whether a camera covers a target at one instant.
//!
//! A target is a set of boxes. One camera covers it when, for every box,
//! enough vertices lie inside the viewing frustum with an unobstructed line
//! of sight, the box centroid is inside the detection distance band and,
//! when the box carries a nominal detection axis, that axis faces the
//! camera within the tolerance cone. A literal is covered when at least `k`
//! cameras cover its target.

use nalgebra::{Point3, Unit, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{transform_box, BoundingBox, Occluder};
use crate::world::{CameraSpec, FrameView};

/// Distance band and facing tolerance of the detector for one target.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectionConstraint {
    #[serde(default)]
    pub d_min: f64,
    #[serde(default = "inf", with = "optional_inf")]
    pub d_max: f64,
    #[serde(default = "pi")]
    pub theta_max: f64,
}

fn inf() -> f64 {
    f64::INFINITY
}

fn pi() -> f64 {
    std::f64::consts::PI
}

mod optional_inf {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_infinite() {
            s.serialize_none()
        } else {
            s.serialize_f64(*v)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

impl Default for DetectionConstraint {
    fn default() -> Self {
        DetectionConstraint {
            d_min: 0.0,
            d_max: f64::INFINITY,
            theta_max: std::f64::consts::PI,
        }
    }
}

impl DetectionConstraint {
    pub fn validate(&self) -> Result<()> {
        if !(self.d_min >= 0.0 && self.d_min < self.d_max) {
            return Err(Error::validation("detection: need 0 <= d_min < d_max"));
        }
        if !(self.theta_max > 0.0 && self.theta_max <= std::f64::consts::PI) {
            return Err(Error::validation("detection: theta_max must lie in (0, π]"));
        }
        Ok(())
    }
}

/// How many of a box's eight vertices must pass.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VertexRule {
    All,
    Fraction(f64),
}

impl VertexRule {
    fn required(&self) -> usize {
        match self {
            VertexRule::All => 8,
            VertexRule::Fraction(rho) => ((rho * 8.0) - 1e-9).ceil().max(0.0) as usize,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoveragePolicy {
    #[serde(default = "all_vertices")]
    pub vertex_rule: VertexRule,
    #[serde(default = "yes")]
    pub occlusion: bool,
    #[serde(default = "one")]
    pub k: usize,
}

fn all_vertices() -> VertexRule {
    VertexRule::All
}

fn yes() -> bool {
    true
}

fn one() -> usize {
    1
}

impl Default for CoveragePolicy {
    fn default() -> Self {
        CoveragePolicy {
            vertex_rule: VertexRule::All,
            occlusion: true,
            k: 1,
        }
    }
}

impl CoveragePolicy {
    pub fn with_k(k: usize) -> Self {
        CoveragePolicy {
            k,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 1 {
            return Err(Error::validation("coverage policy: k must be >= 1"));
        }
        if let VertexRule::Fraction(rho) = self.vertex_rule {
            if !(rho > 0.0 && rho <= 1.0) {
                return Err(Error::validation("coverage policy: fraction must lie in (0, 1]"));
            }
        }
        Ok(())
    }
}

/// Document form of one box: explicit vertices, a centre with half
/// extents, or (neither) the extent of the object whose frame it uses.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxSpec {
    pub frame: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vertices: Option<[[f64; 3]; 8]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub half_extents: Option<[f64; 3]>,
    /// Nominal detection axis in box-frame coordinates.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub axis: Option<[f64; 3]>,
}

/// A target's box set as declared in a skill document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxSetSpec {
    pub boxes: Vec<BoxSpec>,
    #[serde(default)]
    pub detection: DetectionConstraint,
}

/// A box in its own frame, ready to be placed.
#[derive(Clone, Debug, PartialEq)]
pub struct FrameBox {
    pub frame: String,
    pub bbox: BoundingBox,
    pub axis: Option<Unit<Vector3<f64>>>,
}

/// Resolved box set: `b >= 1` boxes, each with eight vertices.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundingBoxSet {
    pub id: String,
    pub boxes: Vec<FrameBox>,
    pub detection: DetectionConstraint,
}

impl BoundingBoxSet {
    pub fn new(id: impl Into<String>, boxes: Vec<FrameBox>, detection: DetectionConstraint) -> Result<Self> {
        let id = id.into();
        if boxes.is_empty() {
            return Err(Error::validation(format!("box set `{id}` is empty")));
        }
        detection.validate()?;
        Ok(BoundingBoxSet { id, boxes, detection })
    }

    /// Boxes in world coordinates at the instant described by `view`.
    pub fn place(&self, view: &FrameView<'_>) -> Result<Vec<WorldBox>> {
        self.boxes
            .iter()
            .map(|b| {
                let pose = view.world_pose(&b.frame)?;
                Ok(WorldBox {
                    bbox: transform_box(&b.bbox, &pose),
                    axis: b.axis.map(|a| Unit::new_normalize(pose.transform_vector(&a))),
                })
            })
            .collect()
    }

    pub fn frames(&self) -> impl Iterator<Item = &str> {
        self.boxes.iter().map(|b| b.frame.as_str())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WorldBox {
    pub bbox: BoundingBox,
    pub axis: Option<Unit<Vector3<f64>>>,
}

/// Point inside the camera's viewing frustum (optical axis camera +z).
pub fn frustum_contains(cam: &CameraSpec, p: &Point3<f64>) -> bool {
    let c = cam.extrinsic.inverse_transform_point(p);
    let z = c.z;
    z >= cam.near
        && z <= cam.far
        && c.x.abs() <= z * (cam.hfov / 2.0).tan()
        && c.y.abs() <= z * (cam.vfov / 2.0).tan()
}

/// Distance band on the box centroid and facing tolerance on its axis.
pub fn detection_ok(cam: &CameraSpec, target: &WorldBox, constraint: &DetectionConstraint) -> bool {
    let centroid = target.bbox.centroid();
    let to_cam = cam.origin() - centroid;
    let d = to_cam.norm();
    if d < constraint.d_min || d > constraint.d_max {
        return false;
    }
    match target.axis {
        None => true,
        Some(axis) => {
            if d == 0.0 {
                return false;
            }
            let cos = (axis.dot(&to_cam) / d).clamp(-1.0, 1.0);
            cos.acos() <= constraint.theta_max
        }
    }
}

/// Line of sight from the camera to `p` blocked by any occluder.
pub fn ray_occluded(cam: &CameraSpec, p: &Point3<f64>, occluders: &[Occluder]) -> bool {
    let o = cam.origin();
    occluders.iter().any(|occ| occ.intersects_segment(&o, p))
}

/// One camera covers every box of the target.
pub fn covers(
    cam: &CameraSpec,
    target: &[WorldBox],
    constraint: &DetectionConstraint,
    policy: &CoveragePolicy,
    occluders: &[Occluder],
) -> bool {
    let need = policy.vertex_rule.required();
    target.iter().all(|b| {
        if !detection_ok(cam, b, constraint) {
            return false;
        }
        let passing = b
            .bbox
            .vertices
            .iter()
            .filter(|v| {
                frustum_contains(cam, v) && !(policy.occlusion && ray_occluded(cam, v, occluders))
            })
            .count();
        passing >= need
    })
}

/// Per-camera verdicts and the k-of-ω literal coverage.
#[derive(Clone, Debug, PartialEq)]
pub struct LiteralCoverage {
    pub per_camera: Vec<bool>,
    pub covered: bool,
}

pub fn literal_covered(
    cams: &[CameraSpec],
    target: &[WorldBox],
    constraint: &DetectionConstraint,
    policy: &CoveragePolicy,
    occluders: &[Occluder],
) -> LiteralCoverage {
    if policy.k > cams.len() {
        log::warn!(
            "k = {} exceeds the {} available cameras; coverage is always 0",
            policy.k,
            cams.len()
        );
    }
    let per_camera: Vec<bool> = cams
        .iter()
        .map(|c| covers(c, target, constraint, policy, occluders))
        .collect();
    let count = per_camera.iter().filter(|b| **b).count();
    LiteralCoverage {
        covered: count >= policy.k,
        per_camera,
    }
}

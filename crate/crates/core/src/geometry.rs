//! Rigid poses, bounding boxes and the exact segment tests used for occlusion.

use nalgebra::{Isometry3, Point3, Translation3, Unit, UnitQuaternion, Vector3};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Tolerated drift of a document quaternion from unit norm before it is
/// rejected. Accepted quaternions are renormalised.
const QUATERNION_NORM_SLACK: f64 = 1e-3;

/// A rigid transform: rotation followed by translation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Pose(Isometry3<f64>);

impl Pose {
    pub fn identity() -> Self {
        Pose(Isometry3::identity())
    }

    pub fn new(position: Vector3<f64>, orientation: UnitQuaternion<f64>) -> Self {
        Pose(Isometry3::from_parts(Translation3::from(position), orientation))
    }

    pub fn from_translation(position: Vector3<f64>) -> Self {
        Self::new(position, UnitQuaternion::identity())
    }

    /// Builds a pose from a `[w, x, y, z]` quaternion, rejecting quaternions
    /// that are far from unit norm.
    pub fn from_wxyz(position: [f64; 3], wxyz: [f64; 4]) -> Result<Self> {
        let q = nalgebra::Quaternion::new(wxyz[0], wxyz[1], wxyz[2], wxyz[3]);
        let norm = q.norm();
        if !norm.is_finite() || (norm - 1.0).abs() > QUATERNION_NORM_SLACK {
            return Err(Error::validation(format!(
                "quaternion {wxyz:?} has norm {norm}, expected 1"
            )));
        }
        Ok(Self::new(Vector3::from(position), UnitQuaternion::from_quaternion(q)))
    }

    /// A pose at `eye` whose +z axis points at `target`.
    pub fn looking_at(eye: Vector3<f64>, target: Vector3<f64>, up: Vector3<f64>) -> Result<Self> {
        let dir = target - eye;
        if dir.norm() < 1e-12 {
            return Err(Error::validation("look_at target coincides with position"));
        }
        let up = if dir.cross(&up).norm() < 1e-9 {
            // Looking straight along `up`; any perpendicular works.
            if dir.cross(&Vector3::x()).norm() < 1e-9 {
                Vector3::y()
            } else {
                Vector3::x()
            }
        } else {
            up
        };
        Ok(Self::new(eye, UnitQuaternion::face_towards(&dir, &up)))
    }

    pub fn position(&self) -> Vector3<f64> {
        self.0.translation.vector
    }

    pub fn orientation(&self) -> UnitQuaternion<f64> {
        self.0.rotation
    }

    pub fn isometry(&self) -> &Isometry3<f64> {
        &self.0
    }

    /// `self ∘ child`: expresses a pose given relative to `self` in the
    /// frame `self` is expressed in.
    pub fn compose(&self, child: &Pose) -> Pose {
        Pose(self.0 * child.0)
    }

    pub fn inverse(&self) -> Pose {
        Pose(self.0.inverse())
    }

    pub fn transform_point(&self, p: &Point3<f64>) -> Point3<f64> {
        self.0.transform_point(p)
    }

    pub fn inverse_transform_point(&self, p: &Point3<f64>) -> Point3<f64> {
        self.0.inverse_transform_point(p)
    }

    pub fn transform_vector(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.0.transform_vector(v)
    }

    /// Linear position / spherical orientation interpolation, `s` in `[0, 1]`.
    pub fn interpolate(&self, other: &Pose, s: f64) -> Pose {
        let p = self.position().lerp(&other.position(), s);
        let q = self
            .orientation()
            .try_slerp(&other.orientation(), s, 1e-12)
            .unwrap_or_else(|| self.orientation());
        Pose::new(p, q)
    }

    /// Quaternion as `[w, x, y, z]`.
    pub fn wxyz(&self) -> [f64; 4] {
        let q = self.orientation();
        [q.w, q.i, q.j, q.k]
    }

    pub fn approx_eq(&self, other: &Pose, tol: f64) -> bool {
        let dp = (self.position() - other.position()).norm();
        let dq = self.orientation().angle_to(&other.orientation());
        dp <= tol && dq <= tol
    }
}

impl Default for Pose {
    fn default() -> Self {
        Pose::identity()
    }
}

/// Document form of a pose. Exactly one of `orientation`, `rpy` and
/// `look_at` may be given; none means identity orientation.
#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PoseDoc {
    #[serde(default)]
    position: [f64; 3],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    orientation: Option<[f64; 4]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rpy: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    look_at: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    up: Option<[f64; 3]>,
}

impl Serialize for Pose {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let p = self.position();
        PoseDoc {
            position: [p.x, p.y, p.z],
            orientation: Some(self.wxyz()),
            ..Default::default()
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Pose {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let doc = PoseDoc::deserialize(d)?;
        let given = [doc.orientation.is_some(), doc.rpy.is_some(), doc.look_at.is_some()]
            .iter()
            .filter(|b| **b)
            .count();
        if given > 1 {
            return Err(D::Error::custom(
                "pose accepts only one of `orientation`, `rpy`, `look_at`",
            ));
        }
        if doc.up.is_some() && doc.look_at.is_none() {
            return Err(D::Error::custom("`up` is only meaningful with `look_at`"));
        }
        let position = Vector3::from(doc.position);
        if let Some(q) = doc.orientation {
            Pose::from_wxyz(doc.position, q).map_err(D::Error::custom)
        } else if let Some([r, p, y]) = doc.rpy {
            Ok(Pose::new(position, UnitQuaternion::from_euler_angles(r, p, y)))
        } else if let Some(target) = doc.look_at {
            let up = Vector3::from(doc.up.unwrap_or([0.0, 0.0, 1.0]));
            Pose::looking_at(position, Vector3::from(target), up).map_err(D::Error::custom)
        } else {
            Ok(Pose::from_translation(position))
        }
    }
}

/// Eight box vertices. Vertex `i` has sign pattern `(bit0, bit1, bit2)` on
/// `(x, y, z)` when built from a centre and half extents.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundingBox {
    pub vertices: [Point3<f64>; 8],
}

impl BoundingBox {
    pub fn from_center_half_extents(center: Vector3<f64>, half: Vector3<f64>) -> Self {
        let vertices = std::array::from_fn(|i| {
            let sx = if i & 1 == 0 { -1.0 } else { 1.0 };
            let sy = if i & 2 == 0 { -1.0 } else { 1.0 };
            let sz = if i & 4 == 0 { -1.0 } else { 1.0 };
            Point3::new(center.x + sx * half.x, center.y + sy * half.y, center.z + sz * half.z)
        });
        BoundingBox { vertices }
    }

    pub fn centroid(&self) -> Point3<f64> {
        let sum = self.vertices.iter().fold(Vector3::zeros(), |acc, v| acc + v.coords);
        Point3::from(sum / 8.0)
    }
}

/// Applies `pose` to every vertex, preserving vertex order.
pub fn transform_box(bbox: &BoundingBox, pose: &Pose) -> BoundingBox {
    BoundingBox {
        vertices: bbox.vertices.map(|v| pose.transform_point(&v)),
    }
}

/// A world-space occluder.
#[derive(Clone, Debug, PartialEq)]
pub enum Occluder {
    Capsule {
        a: Point3<f64>,
        b: Point3<f64>,
        radius: f64,
    },
    /// Oriented box: `pose` maps box-local coordinates to world.
    Box { pose: Pose, half_extents: Vector3<f64> },
}

impl Occluder {
    pub fn intersects_segment(&self, p: &Point3<f64>, q: &Point3<f64>) -> bool {
        match self {
            Occluder::Capsule { a, b, radius } => segment_segment_distance(p, q, a, b) <= *radius,
            Occluder::Box { pose, half_extents } => {
                let lp = pose.inverse_transform_point(p);
                let lq = pose.inverse_transform_point(q);
                segment_intersects_aabb(&lp, &lq, half_extents)
            }
        }
    }
}

/// Minimum distance between closed segments `p1q1` and `p2q2`.
pub fn segment_segment_distance(
    p1: &Point3<f64>,
    q1: &Point3<f64>,
    p2: &Point3<f64>,
    q2: &Point3<f64>,
) -> f64 {
    let d1 = q1 - p1;
    let d2 = q2 - p2;
    let r = p1 - p2;
    let a = d1.dot(&d1);
    let e = d2.dot(&d2);
    let f = d2.dot(&r);
    let eps = 1e-15;

    let (s, t) = if a <= eps && e <= eps {
        (0.0, 0.0)
    } else if a <= eps {
        (0.0, (f / e).clamp(0.0, 1.0))
    } else {
        let c = d1.dot(&r);
        if e <= eps {
            ((-c / a).clamp(0.0, 1.0), 0.0)
        } else {
            let b = d1.dot(&d2);
            let denom = a * e - b * b;
            let mut s = if denom > eps {
                ((b * f - c * e) / denom).clamp(0.0, 1.0)
            } else {
                0.0
            };
            let mut t = (b * s + f) / e;
            if t < 0.0 {
                t = 0.0;
                s = (-c / a).clamp(0.0, 1.0);
            } else if t > 1.0 {
                t = 1.0;
                s = ((b - c) / a).clamp(0.0, 1.0);
            }
            (s, t)
        }
    };
    let c1 = p1 + d1 * s;
    let c2 = p2 + d2 * t;
    (c1 - c2).norm()
}

/// Slab test of segment `pq` against the origin-centred box `[-h, h]`.
pub fn segment_intersects_aabb(p: &Point3<f64>, q: &Point3<f64>, half: &Vector3<f64>) -> bool {
    let d = q - p;
    let mut t_min = 0.0_f64;
    let mut t_max = 1.0_f64;
    for axis in 0..3 {
        let (o, dir, h) = (p[axis], d[axis], half[axis]);
        if dir.abs() < 1e-15 {
            if o < -h || o > h {
                return false;
            }
        } else {
            let inv = 1.0 / dir;
            let mut t0 = (-h - o) * inv;
            let mut t1 = (h - o) * inv;
            if t0 > t1 {
                std::mem::swap(&mut t0, &mut t1);
            }
            t_min = t_min.max(t0);
            t_max = t_max.min(t1);
            if t_min > t_max {
                return false;
            }
        }
    }
    true
}

/// Rotation taking +x onto `dir`.
pub(crate) fn rotation_x_to(dir: &Vector3<f64>) -> UnitQuaternion<f64> {
    let x = Vector3::x();
    UnitQuaternion::rotation_between(&x, dir).unwrap_or_else(|| {
        // Antiparallel: half turn about z.
        UnitQuaternion::from_axis_angle(&Unit::new_normalize(Vector3::z()), std::f64::consts::PI)
    })
}

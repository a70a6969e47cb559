//! Point-to-point motion timing: constant rate, trapezoidal and seven-segment
//! jerk-limited (S-curve) profiles, all starting and ending at rest.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProfileKind {
    SCurve,
    Trapezoid,
    ConstantRate,
}

/// Cartesian limits. A missing `amax` or `jmax` means unlimited.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MotionProfile {
    pub kind: ProfileKind,
    pub vmax: f64,
    #[serde(default = "unlimited", with = "limit")]
    pub amax: f64,
    #[serde(default = "unlimited", with = "limit")]
    pub jmax: f64,
}

fn unlimited() -> f64 {
    f64::INFINITY
}

mod limit {
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

impl MotionProfile {
    pub fn s_curve(vmax: f64, amax: f64, jmax: f64) -> Self {
        MotionProfile {
            kind: ProfileKind::SCurve,
            vmax,
            amax,
            jmax,
        }
    }

    pub fn trapezoid(vmax: f64, amax: f64) -> Self {
        MotionProfile {
            kind: ProfileKind::Trapezoid,
            vmax,
            amax,
            jmax: f64::INFINITY,
        }
    }

    pub fn constant_rate(vmax: f64) -> Self {
        MotionProfile {
            kind: ProfileKind::ConstantRate,
            vmax,
            amax: f64::INFINITY,
            jmax: f64::INFINITY,
        }
    }

    /// `vmax` must be finite and positive; `amax`/`jmax` positive, where
    /// `+inf` stands for "unlimited".
    pub fn validate(&self) -> Result<()> {
        if !(self.vmax.is_finite() && self.vmax > 0.0) {
            return Err(Error::validation("profile: vmax must be finite and positive"));
        }
        for (name, v) in [("amax", self.amax), ("jmax", self.jmax)] {
            if v.is_nan() || v <= 0.0 {
                return Err(Error::validation(format!("profile: {name} must be positive")));
            }
        }
        Ok(())
    }

    fn effective_limits(&self) -> (f64, f64) {
        match self.kind {
            ProfileKind::SCurve => (self.amax, self.jmax),
            ProfileKind::Trapezoid => (self.amax, f64::INFINITY),
            ProfileKind::ConstantRate => (f64::INFINITY, f64::INFINITY),
        }
    }

    /// Time profile covering `length` meters from rest to rest.
    pub fn plan(&self, length: f64) -> Result<ProfilePlan> {
        self.validate()?;
        if !(length.is_finite() && length >= 0.0) {
            return Err(Error::validation("profile: path length must be finite"));
        }
        let (a, j) = self.effective_limits();
        if length == 0.0 {
            return Ok(ProfilePlan {
                length,
                phases: Vec::new(),
                initial_velocity: 0.0,
            });
        }
        if a.is_infinite() && j.is_infinite() {
            return Ok(ProfilePlan {
                length,
                phases: vec![Phase {
                    duration: length / self.vmax,
                    start_accel: Some(0.0),
                    jerk: 0.0,
                }],
                initial_velocity: self.vmax,
            });
        }
        let v = if accel_distance(self.vmax, a, j) * 2.0 <= length {
            self.vmax
        } else {
            peak_velocity(length, a, j)
        };
        let cruise = ((length - 2.0 * accel_distance(v, a, j)) / v).max(0.0);
        let phases = if j.is_infinite() {
            let ta = v / a;
            vec![
                Phase { duration: ta, start_accel: Some(a), jerk: 0.0 },
                Phase { duration: cruise, start_accel: Some(0.0), jerk: 0.0 },
                Phase { duration: ta, start_accel: Some(-a), jerk: 0.0 },
            ]
        } else {
            let (tj, ta) = accel_times(v, a, j);
            let hold = (ta - 2.0 * tj).max(0.0);
            vec![
                Phase { duration: tj, start_accel: None, jerk: j },
                Phase { duration: hold, start_accel: None, jerk: 0.0 },
                Phase { duration: tj, start_accel: None, jerk: -j },
                Phase { duration: cruise, start_accel: Some(0.0), jerk: 0.0 },
                Phase { duration: tj, start_accel: None, jerk: -j },
                Phase { duration: hold, start_accel: None, jerk: 0.0 },
                Phase { duration: tj, start_accel: None, jerk: j },
            ]
        };
        Ok(ProfilePlan {
            length,
            phases,
            initial_velocity: 0.0,
        })
    }
}

/// Jerk time and total acceleration time to go from rest to `v`.
fn accel_times(v: f64, a: f64, j: f64) -> (f64, f64) {
    if j.is_infinite() {
        (0.0, v / a)
    } else if a.is_finite() && v >= a * a / j {
        (a / j, v / a + a / j)
    } else {
        let tj = (v / j).sqrt();
        (tj, 2.0 * tj)
    }
}

/// Distance covered accelerating from rest to `v` (symmetric ramp).
fn accel_distance(v: f64, a: f64, j: f64) -> f64 {
    v * accel_times(v, a, j).1 / 2.0
}

/// Peak velocity of a profile with no cruise phase covering `length`.
fn peak_velocity(length: f64, a: f64, j: f64) -> f64 {
    if j.is_infinite() {
        return (a * length).sqrt();
    }
    let jerk_only = (length * length * j / 4.0).cbrt();
    if a.is_infinite() || jerk_only < a * a / j {
        return jerk_only;
    }
    let r = a * a / j;
    (-r + (r * r + 4.0 * a * length).sqrt()) / 2.0
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct Phase {
    duration: f64,
    /// Acceleration at phase start; `None` continues the previous value.
    start_accel: Option<f64>,
    jerk: f64,
}

/// A concrete rest-to-rest time law along a path of known length.
#[derive(Clone, Debug, PartialEq)]
pub struct ProfilePlan {
    length: f64,
    phases: Vec<Phase>,
    initial_velocity: f64,
}

impl ProfilePlan {
    pub fn duration(&self) -> f64 {
        self.phases.iter().map(|p| p.duration).sum()
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    /// Distance travelled after `tau` seconds (clamped to the profile).
    pub fn distance_at(&self, tau: f64) -> f64 {
        let mut remaining = tau.max(0.0);
        let (mut s, mut v, mut a) = (0.0, self.initial_velocity, 0.0);
        for p in &self.phases {
            if let Some(a0) = p.start_accel {
                a = a0;
            }
            let d = remaining.min(p.duration);
            s += v * d + a * d * d / 2.0 + p.jerk * d * d * d / 6.0;
            v += a * d + p.jerk * d * d / 2.0;
            a += p.jerk * d;
            remaining -= d;
            if remaining <= 0.0 {
                break;
            }
        }
        s.clamp(0.0, self.length)
    }

    /// Fraction of the path completed after `tau` seconds.
    pub fn progress_at(&self, tau: f64) -> f64 {
        if self.length == 0.0 {
            1.0
        } else {
            self.distance_at(tau) / self.length
        }
    }
}

pub fn path_length(path: &[Vector3<f64>]) -> f64 {
    path.windows(2).map(|w| (w[1] - w[0]).norm()).sum()
}

/// Duration of a rest-to-rest move along `path`. Zero-length paths take
/// `dwell` seconds.
pub fn time_parameterize(path: &[Vector3<f64>], profile: &MotionProfile, dwell: f64) -> Result<f64> {
    if path.len() < 2 {
        return Err(Error::validation("time parameterization needs at least two waypoints"));
    }
    let length = path_length(path);
    if length < 1e-12 {
        return Ok(dwell);
    }
    Ok(profile.plan(length)?.duration())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(length: f64) -> Vec<Vector3<f64>> {
        vec![Vector3::zeros(), Vector3::new(length, 0.0, 0.0)]
    }

    #[test]
    fn trapezoid_without_accel_limit_is_constant_rate() {
        let p = MotionProfile::trapezoid(1.0, f64::INFINITY);
        assert!((time_parameterize(&line(1.0), &p, 0.5).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn triangular_trapezoid() {
        let p = MotionProfile::trapezoid(2.0, 1.0);
        assert!((time_parameterize(&line(1.0), &p, 0.5).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn zero_length_is_dwell() {
        let p = MotionProfile::s_curve(0.5, 1.0, 10.0);
        let d = time_parameterize(&[Vector3::zeros(), Vector3::zeros()], &p, 0.5).unwrap();
        assert_eq!(d, 0.5);
    }

    #[test]
    fn rejects_bad_limits() {
        assert!(MotionProfile::trapezoid(f64::INFINITY, 1.0).validate().is_err());
        assert!(MotionProfile::s_curve(1.0, f64::NAN, 1.0).validate().is_err());
        assert!(MotionProfile::s_curve(1.0, 1.0, -1.0).validate().is_err());
        assert!(time_parameterize(&line(1.0)[..1], &MotionProfile::constant_rate(1.0), 0.5).is_err());
    }

    #[test]
    fn plan_reaches_end_at_duration() {
        for prof in [
            MotionProfile::s_curve(0.5, 1.0, 10.0),
            MotionProfile::s_curve(2.0, 1.0, 3.0),
            MotionProfile::s_curve(0.3, f64::INFINITY, 2.0),
            MotionProfile::trapezoid(0.5, 0.7),
            MotionProfile::constant_rate(0.25),
        ] {
            for len in [0.01, 0.3, 1.0, 4.0] {
                let plan = prof.plan(len).unwrap();
                let end = plan.distance_at(plan.duration());
                assert!((end - len).abs() < 1e-9, "{prof:?} {len}: {end}");
                let mut last = 0.0;
                for i in 0..=100 {
                    let s = plan.distance_at(plan.duration() * i as f64 / 100.0);
                    assert!(s + 1e-12 >= last);
                    last = s;
                }
            }
        }
    }

    #[test]
    fn serde_missing_limits_mean_unlimited() {
        let p: MotionProfile = serde_json::from_str(r#"{"kind":"trapezoid","vmax":1}"#).unwrap();
        assert!(p.amax.is_infinite());
        let back = serde_json::to_string(&p).unwrap();
        let again: MotionProfile = serde_json::from_str(&back).unwrap();
        assert_eq!(p, again);
    }
}

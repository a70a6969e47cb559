use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use sensecov::profile::MotionProfile;

/// Time to go from rest to peak speed `v` (and, mirrored, back to rest).
fn ramp_time(v: f64, a: f64, j: f64) -> f64 {
    if v * j >= a * a {
        a / j + v / a
    } else {
        2.0 * (v / j).sqrt()
    }
}

/// Peak speed and total time of the time-optimal rest-to-rest move.
fn optimal(len: f64, vmax: f64, a: f64, j: f64) -> (f64, f64) {
    let ta = ramp_time(vmax, a, j);
    if vmax * ta <= len {
        return (vmax, ta + len / vmax);
    }
    // Distance of a move without cruise is v * ramp_time(v); bisect on v.
    let (mut lo, mut hi) = (0.0, vmax);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid * ramp_time(mid, a, j) < len {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let v = 0.5 * (lo + hi);
    (v, 2.0 * ramp_time(v, a, j))
}

/// Piecewise-constant jerk schedule `(duration, jerk)` for the move.
fn schedule(len: f64, v: f64, a: f64, j: f64) -> Vec<(f64, f64)> {
    let (t1, t2) = if v * j >= a * a {
        (a / j, v / a - a / j)
    } else {
        ((v / j).sqrt(), 0.0)
    };
    let cruise = (len - v * ramp_time(v, a, j)) / v;
    vec![
        (t1, j),
        (t2, 0.0),
        (t1, -j),
        (cruise.max(0.0), 0.0),
        (t1, -j),
        (t2, 0.0),
        (t1, j),
    ]
}

/// Forward integration at `dt`; returns `(time, position)` samples.
fn integrate(sched: &[(f64, f64)], dt: f64) -> Vec<(f64, f64)> {
    let (mut t, mut x, mut v, mut acc) = (0.0, 0.0, 0.0, 0.0);
    let mut out = vec![(0.0, 0.0)];
    for &(dur, jerk) in sched {
        let steps = (dur / dt).round() as usize;
        let h = if steps > 0 { dur / steps as f64 } else { 0.0 };
        for _ in 0..steps {
            x += v * h + acc * h * h / 2.0 + jerk * h * h * h / 6.0;
            v += acc * h + jerk * h * h / 2.0;
            acc += jerk * h;
            t += h;
            out.push((t, x));
        }
    }
    out
}

#[test]
fn s_curve_matches_forward_integration() {
    let mut rng = StdRng::seed_from_u64(5);
    for case in 0..200 {
        let vmax = rng.gen_range(0.02..0.5);
        let a = rng.gen_range(0.05..1.0);
        let j = rng.gen_range(0.2..5.0);
        let len = rng.gen_range(0.001..0.8);
        let (v, t_opt) = optimal(len, vmax, a, j);
        let path = integrate(&schedule(len, v, a, j), 1e-4);
        let &(t_end, x_end) = path.last().unwrap();
        assert!((t_end - t_opt).abs() < 1e-3, "case {case}: schedule length {t_end} vs {t_opt}");
        assert!((x_end - len).abs() < 1e-3, "case {case}: integrated distance {x_end} vs {len}");

        let plan = MotionProfile::s_curve(vmax, a, j).plan(len).unwrap();
        assert!(
            (plan.duration() - t_opt).abs() < 1e-3,
            "case {case} (L={len}, v={vmax}, a={a}, j={j}): duration {} vs oracle {t_opt}",
            plan.duration()
        );
        for &(t, x) in path.iter().step_by(97) {
            let got = plan.distance_at(t);
            assert!((got - x).abs() < 1e-3, "case {case}: distance at {t:.4} is {got}, oracle {x}");
        }
    }
}

#[test]
fn unlimited_acceleration_is_constant_rate() {
    let plan = MotionProfile::constant_rate(0.2).plan(0.5).unwrap();
    assert!((plan.duration() - 2.5).abs() < 1e-12);
    assert!((plan.distance_at(1.0) - 0.2).abs() < 1e-12);
}

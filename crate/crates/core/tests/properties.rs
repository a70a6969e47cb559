use nalgebra::{UnitQuaternion, Vector3};
use proptest::prelude::*;
use sensecov::geometry::{transform_box, BoundingBox, Pose};
use sensecov::mtl::{extract_eoi_intervals, parse_mtl, Formula, SymbolicInterval, TimePoint};
use sensecov::planner::{plan_to, PlanOutcome, PlanningProblem, StripsAction};
use sensecov::quality::segments_of;
use sensecov::world::holds;
use sensecov::{Atom, Literal, WorldState};

fn pose() -> impl Strategy<Value = Pose> {
    (prop::array::uniform3(-2.0..2.0f64), prop::array::uniform3(-3.2..3.2f64)).prop_map(|(p, r)| {
        Pose::new(Vector3::from(p), UnitQuaternion::from_euler_angles(r[0], r[1], r[2]))
    })
}

fn atom() -> impl Strategy<Value = Atom> {
    (0..4usize, prop::collection::vec(0..3usize, 0..3)).prop_map(|(p, args)| {
        let args: Vec<String> = args.iter().map(|a| format!("o{a}")).collect();
        let refs: Vec<&str> = args.iter().map(String::as_str).collect();
        Atom::new(format!("p{p}"), &refs)
    })
}

fn time_point() -> impl Strategy<Value = TimePoint> {
    prop_oneof![
        (1..6u8, any::<bool>()).prop_map(|(a, s)| {
            let a = format!("a{a}");
            if s {
                TimePoint::start(&a)
            } else {
                TimePoint::end(&a)
            }
        }),
        (0..200u32).prop_map(|q| TimePoint::Seconds(q as f64 / 8.0)),
    ]
}

fn interval() -> impl Strategy<Value = SymbolicInterval> {
    (time_point(), time_point()).prop_map(|(lo, hi)| SymbolicInterval { lo, hi })
}

fn formula() -> impl Strategy<Value = Formula> {
    atom().prop_map(Formula::atom).prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(Formula::not),
            (inner.clone(), inner.clone()).prop_map(|(l, r)| Formula::and(l, r)),
            (interval(), inner.clone()).prop_map(|(i, f)| Formula::always(i, f)),
            (interval(), inner).prop_map(|(i, f)| Formula::eventually(i, f)),
        ]
    })
}

fn eventually_intervals(f: &Formula, out: &mut Vec<SymbolicInterval>) {
    match f {
        Formula::Atom(_) => {}
        Formula::Not(g) => eventually_intervals(g, out),
        Formula::And(l, r) => {
            eventually_intervals(l, out);
            eventually_intervals(r, out);
        }
        Formula::Always(_, g) => eventually_intervals(g, out),
        Formula::Eventually(i, g) => {
            out.push(i.clone());
            eventually_intervals(g, out);
        }
    }
}

fn problem() -> impl Strategy<Value = PlanningProblem> {
    let lit = (0..6usize, any::<bool>()).prop_map(|(a, pos)| {
        let a = Atom::new(format!("q{a}"), &[]);
        if pos {
            Literal::pos(a)
        } else {
            Literal::neg(a)
        }
    });
    let action = (
        prop::collection::vec(lit.clone(), 0..3),
        prop::collection::vec(0..6usize, 1..3),
        prop::collection::vec(0..6usize, 0..3),
    );
    (
        prop::collection::vec(action, 1..10),
        prop::collection::vec(any::<bool>(), 6),
        prop::collection::vec(lit, 1..4),
    )
        .prop_map(|(actions, init, goal)| PlanningProblem {
            initial: WorldState::from_atoms(
                init.iter().enumerate().filter(|(_, b)| **b).map(|(i, _)| Atom::new(format!("q{i}"), &[])),
            )
            .unwrap(),
            goal,
            actions: actions
                .into_iter()
                .enumerate()
                .map(|(k, (pre, add, del))| StripsAction {
                    name: format!("act{k}"),
                    params: vec![],
                    pre,
                    add: add.iter().map(|a| Atom::new(format!("q{a}"), &[])).collect(),
                    delete: del.iter().map(|a| Atom::new(format!("q{a}"), &[])).collect(),
                })
                .collect(),
        })
}

fn flags_and_times() -> impl Strategy<Value = (Vec<f64>, Vec<bool>)> {
    prop::collection::vec((0.001..1.0f64, any::<bool>()), 1..40).prop_map(|steps| {
        let mut t = 0.0;
        steps
            .into_iter()
            .map(|(dt, c)| {
                t += dt;
                (t, c)
            })
            .unzip()
    })
}

proptest! {
    #[test]
    fn compose_is_associative(a in pose(), b in pose(), c in pose()) {
        let left = a.compose(&b).compose(&c);
        let right = a.compose(&b.compose(&c));
        prop_assert!(left.approx_eq(&right, 1e-9));
    }

    #[test]
    fn inverse_undoes_pose_and_box(p in pose(), c in prop::array::uniform3(-1.0..1.0f64), h in prop::array::uniform3(0.001..0.5f64)) {
        prop_assert!(p.compose(&p.inverse()).approx_eq(&Pose::identity(), 1e-9));
        let b = BoundingBox::from_center_half_extents(Vector3::from(c), Vector3::from(h));
        let back = transform_box(&transform_box(&b, &p), &p.inverse());
        for (u, v) in b.vertices.iter().zip(&back.vertices) {
            prop_assert!((u - v).norm() < 1e-9);
        }
        let moved = transform_box(&b, &p);
        prop_assert!((moved.centroid() - p.transform_point(&b.centroid())).norm() < 1e-9);
    }

    #[test]
    fn literal_and_its_negation_disagree(atoms in prop::collection::vec(atom(), 0..8), a in atom(), pos in any::<bool>()) {
        let s = WorldState::from_atoms(atoms).unwrap();
        let l = if pos { Literal::pos(a) } else { Literal::neg(a) };
        prop_assert!(holds(&s, &l).unwrap() ^ holds(&s, &l.negated()).unwrap());
    }

    #[test]
    fn mtl_print_parse_round_trip(f in formula()) {
        let text = f.to_string();
        prop_assert_eq!(parse_mtl(&text).unwrap(), f, "{}", text);
    }

    #[test]
    fn eoi_intervals_are_every_eventually_node(f in formula()) {
        let mut want = Vec::new();
        eventually_intervals(&f, &mut want);
        let key = |i: &SymbolicInterval| i.to_string();
        let mut got: Vec<String> = extract_eoi_intervals(&f).iter().map(key).collect();
        let mut want: Vec<String> = want.iter().map(key).collect();
        got.sort();
        want.sort();
        prop_assert_eq!(got, want);
    }

    #[test]
    fn segments_are_maximal_disjoint_and_bounded((times, flags) in flags_and_times()) {
        let segs = segments_of(&times, &flags);
        let span = times.last().unwrap() - times[0];
        let total: f64 = segs.iter().map(|s| s.delta).sum();
        prop_assert!(total >= 0.0 && total <= span + 1e-12);
        for s in &segs {
            prop_assert!(flags[s.start..=s.end].iter().all(|c| *c));
            prop_assert!(s.start == 0 || !flags[s.start - 1]);
            prop_assert!(s.end + 1 == flags.len() || !flags[s.end + 1]);
            prop_assert!((s.delta - (times[s.end] - times[s.start])).abs() < 1e-12);
        }
        for w in segs.windows(2) {
            prop_assert!(w[0].end + 1 < w[1].start);
        }
        prop_assert_eq!(segs.iter().map(|s| s.end - s.start + 1).sum::<usize>(), flags.iter().filter(|c| **c).count());
    }

    #[test]
    fn covering_more_samples_never_lowers_total((times, flags) in flags_and_times(), flip in any::<prop::sample::Index>()) {
        let before: f64 = segments_of(&times, &flags).iter().map(|s| s.delta).sum();
        let mut more = flags.clone();
        more[flip.index(flags.len())] = true;
        let after: f64 = segments_of(&times, &more).iter().map(|s| s.delta).sum();
        prop_assert!(after >= before - 1e-12);
    }

    #[test]
    fn returned_plans_validate(p in problem()) {
        if let PlanOutcome::Plan(plan) = plan_to(&p).unwrap() {
            prop_assert!(p.validates(&plan));
        }
    }
}

use sensecov::monitor::{OutcomeStatus, Scenario};
use sensecov::reference;
use sensecov::session::{format_table, CommitRequest, EvaluateRequest, SessionEvent};
use sensecov::{Criterion, Session, SessionStore};

fn pickup_session() -> Session {
    Session::new("ref", &reference::create_request("pickup", None).unwrap()).unwrap()
}

#[test]
fn pickup_ranks_reachable_cubes_and_rejects_g6() {
    let mut s = pickup_session();
    let e = s.evaluate(&EvaluateRequest::new("pickup", "cube")).unwrap();
    assert_eq!(e.status, "5 feasible, 1 infeasible");
    let order: Vec<&str> = e.candidates.iter().map(|c| c.candidate.as_str()).collect();
    assert_eq!(order.last(), Some(&"g6"));
    let g6 = e.candidate("g6").unwrap();
    assert!(!g6.feasible());
    assert!(g6.reasons.iter().any(|r| r.contains("reach")), "{:?}", g6.reasons);
    // g1 is the only reachable cube never seen while it could slip.
    let g1 = e.candidate("g1").unwrap().report.as_ref().unwrap();
    assert_eq!(g1.q_eoi, Some(0.0));
    assert_eq!(order[4], "g1");
    let table = format_table(&e);
    assert!(table.contains("g6") && table.contains("N/A"), "{table}");
}

#[test]
fn criterion_changes_the_winner() {
    let mut s = pickup_session();
    let lex = s.evaluate(&EvaluateRequest::new("pickup", "")).unwrap();
    let mut req = EvaluateRequest::new("pickup", "");
    req.criterion = Criterion::Avg;
    let avg = s.evaluate(&req).unwrap();
    let best = |e: &sensecov::session::EvaluationResult| e.candidates[0].report.clone().unwrap();
    assert_eq!(best(&avg).parameter, "g5");
    assert!(best(&lex).q_eoi == Some(1.0));
}

#[test]
fn program_pickup_then_drop() {
    let mut s = pickup_session();
    s.evaluate(&EvaluateRequest::new("pickup", "")).unwrap();
    let pick = s
        .commit(&CommitRequest {
            skill: "pickup".into(),
            parameter: "g2".into(),
        })
        .unwrap();
    let e = s.evaluate(&EvaluateRequest::new("pickup", "")).unwrap();
    assert!(e.candidates.iter().all(|c| !c.feasible()), "gripper is full");
    let d = s.evaluate(&EvaluateRequest::new("drop", "")).unwrap();
    assert!(d.candidate("g2").unwrap().feasible());
    let drop = s
        .commit(&CommitRequest {
            skill: "drop".into(),
            parameter: "g2".into(),
        })
        .unwrap();
    let run = s.run(&Scenario::default()).unwrap();
    assert_eq!(run.status, OutcomeStatus::Completed);
    assert_eq!(run.outcomes.len(), 2);
    assert!((run.t_e - (pick.report.t_total + drop.report.t_total)).abs() < 1e-6);
}

#[test]
fn coarse_sampling_misses_the_g1_window() {
    let scene = reference::sim_pickup_scene();
    let skill = reference::pickup_skill();
    let q = |n| {
        sensecov::evaluate_candidate(&skill, "g1", &scene, &sensecov::EvalSettings::uniform(n))
            .unwrap()
            .report
            .q_avg
    };
    assert!((q(10) - q(40)).abs() < 0.02);
    assert!((q(5) - q(40)).abs() >= 0.05);
}

#[test]
fn slip_on_hidden_screw_is_caught_late() {
    let run = |p: &str| {
        let mut s = Session::new("red", &reference::create_request("red", None).unwrap()).unwrap();
        s.evaluate(&EvaluateRequest::new("pickup", "screw")).unwrap();
        s.commit(&CommitRequest {
            skill: "pickup".into(),
            parameter: p.into(),
        })
        .unwrap();
        s.run(&reference::slip_scenario(p).unwrap()).unwrap()
    };
    let (seen, hidden) = (run("red1"), run("red2"));
    assert_eq!(seen.status, OutcomeStatus::Retried);
    assert_eq!(hidden.status, OutcomeStatus::Retried);
    let (a, b) = (&seen.outcomes[0], &hidden.outcomes[0]);
    assert_eq!(a.t_f, b.t_f);
    assert!(a.t_r.unwrap() < b.t_r.unwrap());
    assert!(seen.t_e < hidden.t_e);
    assert!(a.t_redo.unwrap() >= a.t_r.unwrap());
}

#[test]
fn stopping_policy_ends_the_program() {
    let mut s = Session::new("red", &reference::create_request("red", None).unwrap()).unwrap();
    s.evaluate(&EvaluateRequest::new("pickup", "")).unwrap();
    s.commit(&CommitRequest {
        skill: "pickup".into(),
        parameter: "red1".into(),
    })
    .unwrap();
    let mut sc = reference::slip_scenario("red1").unwrap();
    sc.policy.response = sensecov::monitor::Response::Stop;
    let run = s.run(&sc).unwrap();
    assert_eq!(run.status, OutcomeStatus::Stopped);
    assert_eq!(Some(run.t_e), run.outcomes[0].t_r);
}

#[test]
fn stored_session_replays_to_the_same_reports() {
    let dir = tempfile::tempdir().unwrap();
    let store = SessionStore::open(dir.path()).unwrap();
    let s = store.create(&reference::create_request("red", Some("r1".into())).unwrap()).unwrap();
    assert_eq!(s.id, "r1");
    let req = EvaluateRequest::new("pickup", "");
    store.execute("r1", SessionEvent::Evaluated(req.clone()), |s, _| s.evaluate(&req)).unwrap();
    let commit = CommitRequest {
        skill: "pickup".into(),
        parameter: "red2".into(),
    };
    store.execute("r1", SessionEvent::Committed(commit.clone()), |s, _| s.commit(&commit)).unwrap();
    let sc = reference::slip_scenario("red2").unwrap();
    let live = store.execute("r1", SessionEvent::Ran(sc.clone()), |s, _| s.run(&sc)).unwrap();
    let replayed = store.load("r1").unwrap();
    let reports = replayed.reports();
    assert_eq!(reports.last_run.as_ref().unwrap().t_e, live.t_e);
    assert_eq!(replayed.program.len(), 1);
    // A rejected command leaves the log untouched.
    let bad = CommitRequest {
        skill: "pickup".into(),
        parameter: "red1".into(),
    };
    assert!(store.execute("r1", SessionEvent::Committed(bad.clone()), |s, _| s.commit(&bad)).is_err());
    assert_eq!(store.load("r1").unwrap().program.len(), 1);
}

#[test]
fn commit_then_evaluate_matches_a_fresh_session_in_the_new_state() {
    let mut s = pickup_session();
    s.evaluate(&EvaluateRequest::new("pickup", "")).unwrap();
    s.commit(&CommitRequest {
        skill: "pickup".into(),
        parameter: "g3".into(),
    })
    .unwrap();
    let req = sensecov::session::CreateRequest {
        id: None,
        scene: s.scene.clone(),
        skills: s.skills.values().map(|k| k.doc().clone()).collect(),
        world: Some(s.world.atoms().cloned().collect()),
        robot: s.robot.clone(),
    };
    let mut fresh = Session::new("fresh", &req).unwrap();
    for skill in ["pickup", "drop"] {
        let e = EvaluateRequest::new(skill, "");
        assert_eq!(s.evaluate(&e).unwrap(), fresh.evaluate(&e).unwrap());
    }
}

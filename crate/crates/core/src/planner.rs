//! Dependency checks before grounding: candidate enumeration, reachability,
//! precondition verdicts and plan suggestions from a forward STRIPS search
//! guided by the relaxed-plan (delete-ignoring) heuristic.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap, HashMap, HashSet, VecDeque};

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Pose;
use crate::skill::SkillDef;
use crate::world::{holds, Atom, Literal, RobotModel, Scene, WorldState};

/// Distance from the robot base origin within `[reach_min, reach_max]`.
pub fn within_reach(robot: &RobotModel, p: &Vector3<f64>) -> bool {
    let d = (p - robot.base.position()).norm();
    d >= robot.reach_min() - 1e-9 && d <= robot.reach_max() + 1e-9
}

/// Spherical-shell reachability of a target pose (closed bounds).
pub fn reachable(robot: &RobotModel, target: &Pose) -> bool {
    within_reach(robot, &target.position())
}

/// Scene objects accepted by the skill's first parameter type and carrying
/// every whitespace-separated tag of `filter`.
pub fn enumerate_candidates(scene: &Scene, skill: &SkillDef, filter: &str) -> Vec<String> {
    let tags: Vec<&str> = filter.split_whitespace().collect();
    scene
        .objects
        .iter()
        .filter(|o| skill.params().first().map_or(true, |p| p.accepts(o)))
        .filter(|o| tags.iter().all(|t| o.has_tag(t) || o.name == *t))
        .map(|o| o.name.clone())
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StripsAction {
    pub name: String,
    pub params: Vec<String>,
    pub pre: Vec<Literal>,
    pub add: Vec<Atom>,
    pub delete: Vec<Atom>,
}

impl StripsAction {
    pub fn applicable(&self, state: &WorldState) -> bool {
        self.pre.iter().all(|l| state.contains(&l.atom) == l.positive)
    }

    pub fn apply(&self, state: &WorldState) -> WorldState {
        state.progress(&self.add, &self.delete)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanningProblem {
    pub initial: WorldState,
    pub goal: Vec<Literal>,
    pub actions: Vec<StripsAction>,
}

impl PlanningProblem {
    pub fn goal_holds(&self, state: &WorldState) -> bool {
        self.goal.iter().all(|l| state.contains(&l.atom) == l.positive)
    }

    /// Executes `plan` (action indices) under STRIPS progression; true iff
    /// every precondition holds in turn and the goal holds at the end.
    pub fn validates(&self, plan: &[usize]) -> bool {
        let mut s = self.initial.clone();
        for &i in plan {
            let a = &self.actions[i];
            if !a.applicable(&s) {
                return false;
            }
            s = a.apply(&s);
        }
        self.goal_holds(&s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PlannerConfig {
    /// Expansions without heuristic improvement before switching to
    /// breadth-first search.
    pub plateau: usize,
    pub budget: usize,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        PlannerConfig {
            plateau: 10_000,
            budget: 1_000_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PlanOutcome {
    /// Action indices into the problem's action list.
    Plan(Vec<usize>),
    Unsolvable,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlanStats {
    pub outcome: PlanOutcome,
    pub expansions: usize,
    pub fell_back: bool,
}

/// Finds a plan with the default configuration.
pub fn plan_to(problem: &PlanningProblem) -> Result<PlanOutcome> {
    Ok(plan_with(problem, &PlannerConfig::default())?.outcome)
}

type Bits = Vec<u64>;

struct Compiled {
    n_atoms: usize,
    pre_pos: Vec<Vec<usize>>,
    pre_neg: Vec<Vec<usize>>,
    add: Vec<Vec<usize>>,
    del: Vec<Vec<usize>>,
    goal_pos: Vec<usize>,
    goal_neg: Vec<usize>,
    words: usize,
}

fn get(bits: &Bits, i: usize) -> bool {
    bits[i / 64] >> (i % 64) & 1 == 1
}

fn set(bits: &mut Bits, i: usize, v: bool) {
    if v {
        bits[i / 64] |= 1 << (i % 64);
    } else {
        bits[i / 64] &= !(1 << (i % 64));
    }
}

impl Compiled {
    fn new(p: &PlanningProblem) -> (Self, Bits) {
        let mut ids: HashMap<Atom, usize> = HashMap::new();
        let mut intern = |a: &Atom| -> usize {
            let next = ids.len();
            *ids.entry(a.clone()).or_insert(next)
        };
        let split = |ls: &[Literal], intern: &mut dyn FnMut(&Atom) -> usize| {
            let (mut pos, mut neg) = (Vec::new(), Vec::new());
            for l in ls {
                let i = intern(&l.atom);
                if l.positive {
                    pos.push(i)
                } else {
                    neg.push(i)
                }
            }
            (pos, neg)
        };
        let mut pre_pos = Vec::new();
        let mut pre_neg = Vec::new();
        let mut add = Vec::new();
        let mut del = Vec::new();
        for a in &p.actions {
            let (pp, pn) = split(&a.pre, &mut intern);
            pre_pos.push(pp);
            pre_neg.push(pn);
            add.push(a.add.iter().map(&mut intern).collect());
            del.push(a.delete.iter().map(&mut intern).collect());
        }
        let (goal_pos, goal_neg) = split(&p.goal, &mut intern);
        let init_ids: Vec<usize> = p.initial.atoms().map(&mut intern).collect();
        let n_atoms = ids.len();
        let words = n_atoms.div_ceil(64).max(1);
        let mut init = vec![0u64; words];
        for i in init_ids {
            set(&mut init, i, true);
        }
        (
            Compiled {
                n_atoms,
                pre_pos,
                pre_neg,
                add,
                del,
                goal_pos,
                goal_neg,
                words,
            },
            init,
        )
    }

    fn applicable(&self, s: &Bits, a: usize) -> bool {
        self.pre_pos[a].iter().all(|&i| get(s, i)) && self.pre_neg[a].iter().all(|&i| !get(s, i))
    }

    fn apply(&self, s: &Bits, a: usize) -> Bits {
        let mut n = s.clone();
        for &i in &self.del[a] {
            set(&mut n, i, false);
        }
        for &i in &self.add[a] {
            set(&mut n, i, true);
        }
        n
    }

    fn is_goal(&self, s: &Bits) -> bool {
        self.goal_pos.iter().all(|&i| get(s, i)) && self.goal_neg.iter().all(|&i| !get(s, i))
    }

    /// Relaxed-plan length from `s`, or `None` when the positive goals are
    /// unreachable even ignoring deletes.
    fn h_ff(&self, s: &Bits) -> Option<usize> {
        const UNREACHED: usize = usize::MAX;
        let mut level = vec![UNREACHED; self.n_atoms];
        let mut achiever = vec![usize::MAX; self.n_atoms];
        for (i, l) in level.iter_mut().enumerate() {
            if get(s, i) {
                *l = 0;
            }
        }
        let mut used = vec![false; self.pre_pos.len()];
        let mut layer = 0;
        loop {
            if self.goal_pos.iter().all(|&g| level[g] != UNREACHED) {
                break;
            }
            layer += 1;
            let mut changed = false;
            let mut newly = Vec::new();
            for a in 0..self.pre_pos.len() {
                if used[a] || !self.pre_pos[a].iter().all(|&i| level[i] < layer) {
                    continue;
                }
                used[a] = true;
                for &i in &self.add[a] {
                    if level[i] == UNREACHED {
                        newly.push((i, a));
                    }
                }
            }
            for (i, a) in newly {
                if level[i] == UNREACHED {
                    level[i] = layer;
                    achiever[i] = a;
                    changed = true;
                }
            }
            if !changed {
                return None;
            }
        }
        let mut chosen: HashSet<usize> = HashSet::new();
        let mut stack: Vec<usize> = self.goal_pos.clone();
        let mut seen = vec![false; self.n_atoms];
        while let Some(g) = stack.pop() {
            if seen[g] || level[g] == 0 {
                continue;
            }
            seen[g] = true;
            let a = achiever[g];
            if chosen.insert(a) {
                stack.extend(self.pre_pos[a].iter().copied());
            }
        }
        Some(chosen.len())
    }
}

struct Node {
    state: Bits,
    parent: usize,
    action: usize,
    g: usize,
}

fn extract(nodes: &[Node], mut i: usize) -> Vec<usize> {
    let mut plan = Vec::new();
    while nodes[i].parent != usize::MAX {
        plan.push(nodes[i].action);
        i = nodes[i].parent;
    }
    plan.reverse();
    plan
}

/// Best-first search on `g + h_FF`, switching to breadth-first search
/// after `plateau` expansions without a new best heuristic value.
pub fn plan_with(problem: &PlanningProblem, cfg: &PlannerConfig) -> Result<PlanStats> {
    for l in &problem.goal {
        if !l.atom.is_ground() {
            return Err(Error::validation(format!("goal literal `{l}` is not ground")));
        }
    }
    let (c, init) = Compiled::new(problem);
    debug_assert_eq!(init.len(), c.words);
    let n_actions = problem.actions.len();
    let mut expansions = 0usize;

    if c.is_goal(&init) {
        return Ok(PlanStats {
            outcome: PlanOutcome::Plan(Vec::new()),
            expansions,
            fell_back: false,
        });
    }
    let Some(h0) = c.h_ff(&init) else {
        return Ok(PlanStats {
            outcome: PlanOutcome::Unsolvable,
            expansions,
            fell_back: false,
        });
    };

    let mut nodes = vec![Node {
        state: init.clone(),
        parent: usize::MAX,
        action: usize::MAX,
        g: 0,
    }];
    let mut closed: HashSet<Bits> = HashSet::new();
    let mut open = BinaryHeap::new();
    open.push(Reverse((h0, h0, 0usize)));
    let mut best_h = h0;
    let mut since_best = 0usize;

    while let Some(Reverse((_, _, idx))) = open.pop() {
        let state = nodes[idx].state.clone();
        if !closed.insert(state.clone()) {
            continue;
        }
        if c.is_goal(&state) {
            return Ok(PlanStats {
                outcome: PlanOutcome::Plan(extract(&nodes, idx)),
                expansions,
                fell_back: false,
            });
        }
        expansions += 1;
        if expansions > cfg.budget {
            return Err(Error::PlanningBudget(cfg.budget));
        }
        since_best += 1;
        if since_best > cfg.plateau {
            log::info!("heuristic plateau after {expansions} expansions; switching to breadth-first search");
            let (outcome, more) = bfs(&c, &init, n_actions, cfg.budget - expansions)?;
            return Ok(PlanStats {
                outcome,
                expansions: expansions + more,
                fell_back: true,
            });
        }
        let g = nodes[idx].g + 1;
        for a in 0..n_actions {
            if !c.applicable(&state, a) {
                continue;
            }
            let next = c.apply(&state, a);
            if closed.contains(&next) {
                continue;
            }
            let Some(h) = c.h_ff(&next) else { continue };
            if h < best_h {
                best_h = h;
                since_best = 0;
            }
            nodes.push(Node {
                state: next,
                parent: idx,
                action: a,
                g,
            });
            open.push(Reverse((g + h, h, nodes.len() - 1)));
        }
    }
    Ok(PlanStats {
        outcome: PlanOutcome::Unsolvable,
        expansions,
        fell_back: false,
    })
}

fn bfs(c: &Compiled, init: &Bits, n_actions: usize, budget: usize) -> Result<(PlanOutcome, usize)> {
    let mut nodes = vec![Node {
        state: init.clone(),
        parent: usize::MAX,
        action: usize::MAX,
        g: 0,
    }];
    let mut seen: HashSet<Bits> = HashSet::from([init.clone()]);
    let mut queue = VecDeque::from([0usize]);
    let mut expansions = 0;
    while let Some(idx) = queue.pop_front() {
        if c.is_goal(&nodes[idx].state) {
            return Ok((PlanOutcome::Plan(extract(&nodes, idx)), expansions));
        }
        expansions += 1;
        if expansions > budget {
            return Err(Error::PlanningBudget(budget));
        }
        let state = nodes[idx].state.clone();
        for a in 0..n_actions {
            if c.applicable(&state, a) {
                let next = c.apply(&state, a);
                if seen.insert(next.clone()) {
                    nodes.push(Node {
                        state: next,
                        parent: idx,
                        action: a,
                        g: nodes[idx].g + 1,
                    });
                    queue.push_back(nodes.len() - 1);
                }
            }
        }
    }
    Ok((PlanOutcome::Unsolvable, expansions))
}

/// Grounds every skill of `library` over the scene's objects as STRIPS
/// actions, named `skill(arg,...)`.
pub fn ground_library(library: &[SkillDef], scene: &Scene) -> Vec<StripsAction> {
    let mut out = Vec::new();
    for skill in library {
        let domains: Vec<Vec<&str>> = skill
            .params()
            .iter()
            .map(|p| {
                scene
                    .objects
                    .iter()
                    .filter(|o| p.accepts(o))
                    .map(|o| o.name.as_str())
                    .collect()
            })
            .collect();
        let mut combos: Vec<Vec<&str>> = vec![Vec::new()];
        for d in &domains {
            combos = combos
                .into_iter()
                .flat_map(|c| {
                    d.iter().map(move |v| {
                        let mut c = c.clone();
                        c.push(v);
                        c
                    })
                })
                .collect();
        }
        for args in combos {
            let binding: BTreeMap<String, String> = skill
                .params()
                .iter()
                .zip(&args)
                .map(|(p, a)| (p.name.clone(), a.to_string()))
                .collect();
            let post: Vec<Literal> = skill.post().iter().map(|l| l.substitute(&binding)).collect();
            let add: Vec<Atom> = post.iter().filter(|l| l.positive).map(|l| l.atom.clone()).collect();
            let delete: Vec<Atom> = post
                .iter()
                .filter(|l| !l.positive && !add.contains(&l.atom))
                .map(|l| l.atom.clone())
                .collect();
            out.push(StripsAction {
                name: format!("{}({})", skill.name(), args.join(",")),
                params: args.iter().map(|s| s.to_string()).collect(),
                pre: skill.pre().iter().map(|l| l.substitute(&binding)).collect(),
                add,
                delete,
            });
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LiteralVerdict {
    pub literal: Literal,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlanStatus {
    NotNeeded,
    Found,
    Unsolvable,
    BudgetExceeded,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DependencyReport {
    pub candidate: String,
    pub preconditions: Vec<LiteralVerdict>,
    pub reachable: bool,
    pub plan_status: PlanStatus,
    /// Suggested actions restoring the preconditions; advisory only.
    pub plan: Vec<String>,
    pub feasible: bool,
}

impl DependencyReport {
    /// Human-readable reasons the candidate is infeasible.
    pub fn reasons(&self) -> Vec<String> {
        let mut r: Vec<String> = self
            .preconditions
            .iter()
            .filter(|v| !v.holds)
            .map(|v| format!("precondition {} does not hold", v.literal))
            .collect();
        if !self.reachable {
            r.push("target is outside the robot's reach".into());
        }
        r
    }
}

/// Precondition verdicts, reachability and (when preconditions fail) a
/// suggested plan built from the skills in `library`.
pub fn check_dependencies(
    world: &WorldState,
    skill: &SkillDef,
    candidate: &str,
    scene: &Scene,
    library: &[SkillDef],
) -> Result<DependencyReport> {
    let binding = skill.bind(candidate)?;
    let pre: Vec<Literal> = skill.pre().iter().map(|l| l.substitute(&binding)).collect();
    let preconditions = pre
        .iter()
        .map(|l| {
            Ok(LiteralVerdict {
                literal: l.clone(),
                holds: holds(world, l)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let reachable = match scene.object(candidate) {
        Some(o) => reachable(&scene.robot, &o.pose),
        None => skill.params().is_empty(),
    };
    let all_hold = preconditions.iter().all(|v| v.holds);
    let (plan_status, plan) = if all_hold {
        (PlanStatus::NotNeeded, Vec::new())
    } else {
        let problem = PlanningProblem {
            initial: world.clone(),
            goal: pre,
            actions: ground_library(library, scene),
        };
        match plan_to(&problem) {
            Ok(PlanOutcome::Plan(p)) => (
                PlanStatus::Found,
                p.into_iter().map(|i| problem.actions[i].name.clone()).collect(),
            ),
            Ok(PlanOutcome::Unsolvable) => (PlanStatus::Unsolvable, Vec::new()),
            Err(Error::PlanningBudget(_)) => (PlanStatus::BudgetExceeded, Vec::new()),
            Err(e) => return Err(e),
        }
    };
    Ok(DependencyReport {
        candidate: candidate.to_string(),
        preconditions,
        reachable,
        plan_status,
        plan,
        feasible: all_hold && reachable,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grounding::tests::{desk_scene, pick_skill};

    fn atom(s: &str) -> Atom {
        s.parse().unwrap()
    }

    fn act(name: &str, pre: &[&str], add: &[&str], del: &[&str]) -> StripsAction {
        StripsAction {
            name: name.into(),
            params: vec![],
            pre: pre.iter().map(|s| s.parse().unwrap()).collect(),
            add: add.iter().map(|s| atom(s)).collect(),
            delete: del.iter().map(|s| atom(s)).collect(),
        }
    }

    #[test]
    fn goal_already_true_gives_empty_plan() {
        let p = PlanningProblem {
            initial: WorldState::from_atoms([atom("a")]).unwrap(),
            goal: vec!["a".parse().unwrap()],
            actions: vec![],
        };
        assert_eq!(plan_to(&p).unwrap(), PlanOutcome::Plan(vec![]));
    }

    #[test]
    fn unsatisfiable_goal() {
        let p = PlanningProblem {
            initial: WorldState::new(),
            goal: vec!["z".parse().unwrap()],
            actions: vec![act("x", &[], &["a"], &[])],
        };
        assert_eq!(plan_to(&p).unwrap(), PlanOutcome::Unsolvable);
    }

    #[test]
    fn chain_with_negative_precondition() {
        let p = PlanningProblem {
            initial: WorldState::from_atoms([atom("locked")]).unwrap(),
            goal: vec!["inside".parse().unwrap()],
            actions: vec![
                act("enter", &["open", "!locked"], &["inside"], &[]),
                act("unlock", &["locked"], &[], &["locked"]),
                act("open", &["!locked"], &["open"], &[]),
            ],
        };
        let PlanOutcome::Plan(plan) = plan_to(&p).unwrap() else { panic!() };
        assert_eq!(plan, vec![1, 2, 0]);
        assert!(p.validates(&plan));
    }

    #[test]
    fn plateau_falls_back_to_bfs() {
        let p = PlanningProblem {
            initial: WorldState::new(),
            goal: vec!["b".parse().unwrap()],
            actions: vec![act("a", &[], &["a"], &[]), act("b", &["a"], &["b"], &[])],
        };
        let stats = plan_with(&p, &PlannerConfig { plateau: 0, budget: 100 }).unwrap();
        assert!(stats.fell_back);
        assert_eq!(stats.outcome, PlanOutcome::Plan(vec![0, 1]));
    }

    #[test]
    fn reachability_shell_is_closed() {
        let scene = desk_scene();
        let r = &scene.robot;
        let mid = (r.reach_min() + r.reach_max()) / 2.0;
        assert!(reachable(r, &Pose::from_translation(Vector3::new(mid, 0.0, 0.0))));
        assert!(reachable(r, &Pose::from_translation(Vector3::new(r.reach_max(), 0.0, 0.0))));
        assert!(!reachable(r, &Pose::from_translation(Vector3::new(r.reach_max() + 0.01, 0.0, 0.0))));
    }

    #[test]
    fn candidates_by_filter() {
        let scene = desk_scene();
        assert_eq!(enumerate_candidates(&scene, &pick_skill(), "green"), vec!["cube"]);
        assert!(enumerate_candidates(&scene, &pick_skill(), "purple").is_empty());
    }

    #[test]
    fn dependency_plan_suggests_drop() {
        let scene = desk_scene();
        let drop = SkillDef::from_json(
            r#"{"name": "drop", "params": [{"name": "?obj", "type": "graspable"}],
                "pre": ["hold(?obj)"], "post": ["!hold(?obj)", "gripper_empty", "on_table(?obj)"],
                "actions": [{"name": "a1", "motion": {"release": "?obj"}}]}"#,
        )
        .unwrap();
        let world = WorldState::from_atoms([atom("on_table(cube)"), atom("hold(other)")]).unwrap();
        let mut scene2 = scene.clone();
        let mut other = scene2.objects[0].clone();
        other.name = "other".into();
        scene2.objects.push(other);
        let r = check_dependencies(&world, &pick_skill(), "cube", &scene2, &[pick_skill(), drop]).unwrap();
        assert!(!r.feasible);
        assert_eq!(r.plan_status, PlanStatus::Found);
        assert_eq!(r.plan, vec!["drop(other)"]);

        let ok = WorldState::from_atoms([atom("on_table(cube)"), atom("gripper_empty")]).unwrap();
        let r = check_dependencies(&ok, &pick_skill(), "cube", &scene, &[]).unwrap();
        assert!(r.feasible);
        assert!(r.plan.is_empty());
    }
}

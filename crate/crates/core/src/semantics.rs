//! Exact evaluation of the knowledge/temporal language over an interpreted
//! system, plus the primitive-knowledge extractors and their explicit V-set
//! constructions.
//!
//! Evaluation is bottom-up per formula node, producing one boolean per point.
//! `Know` quantifies over the agent's whole indistinguishability class (any
//! run, any time); `Eventually` quantifies over the remaining represented
//! times of the run, with the state at the epistemic fixpoint standing in for
//! the unrepresented infinite tail.

use std::collections::BTreeMap;
use std::collections::HashMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::formula::{Formula, PrimitiveValueFormula};
use crate::model::{AgentId, Atom, DropPattern, InterpretedSystem, LocalState, Run, Value};

/// A satisfaction point: one run at one time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Point {
    pub run: usize,
    pub time: u32,
}

/// Per-agent partition of all points by local-view equality.
#[derive(Debug)]
pub struct Partition {
    /// Class id per linearized point index.
    pub(crate) class_of: Vec<u32>,
    /// Member points per class, in (run, time) order.
    pub(crate) members: Vec<Vec<Point>>,
}

/// Groups every point of every run by structural local-state equality, one
/// partition per agent. Fingerprints prune the comparisons; equality within a
/// bucket is always reverified structurally.
pub(crate) fn build_partitions(runs: &[Run], n_agents: u32) -> Vec<Partition> {
    let times = runs[0].states().len();
    let point_count = runs.len() * times;
    let mut partitions = Vec::with_capacity(n_agents as usize);
    for agent in (1..=n_agents).map(AgentId::new) {
        let mut class_of = vec![0u32; point_count];
        let mut members: Vec<Vec<Point>> = Vec::new();
        let mut reps: Vec<Arc<LocalState>> = Vec::new();
        let mut buckets: HashMap<u64, Vec<u32>> = HashMap::new();
        for (run_idx, run) in runs.iter().enumerate() {
            for (time, state) in run.states().iter().enumerate() {
                let point = Point { run: run_idx, time: time as u32 };
                let local = state.local(agent);
                let bucket = buckets.entry(local.fingerprint()).or_default();
                let class = bucket
                    .iter()
                    .copied()
                    .find(|&c| reps[c as usize].as_ref() == local.as_ref());
                let class = match class {
                    Some(c) => c,
                    None => {
                        let c = members.len() as u32;
                        members.push(Vec::new());
                        reps.push(Arc::clone(local));
                        bucket.push(c);
                        c
                    }
                };
                class_of[run_idx * times + time] = class;
                members[class as usize].push(point);
            }
        }
        partitions.push(Partition { class_of, members });
    }
    partitions
}

/// Computes, for every agent and point, the set of `init` atoms the agent
/// knows there: the atoms whose value is constant across the agent's
/// indistinguishability class. Always contains the agent's own input.
pub(crate) fn compute_v_sets(runs: &[Run], partitions: &[Partition], n_agents: u32) -> Vec<Vec<PrimitiveValueFormula>> {
    let mut out = Vec::with_capacity(n_agents as usize);
    for agent in (1..=n_agents).map(AgentId::new) {
        let partition = &partitions[agent.slot()];
        let mut per_class: Vec<PrimitiveValueFormula> = Vec::with_capacity(partition.members.len());
        for class in &partition.members {
            let first = runs[class[0].run].input();
            let mut map: BTreeMap<AgentId, Value> = (1..=n_agents)
                .map(AgentId::new)
                .map(|b| (b, first.value(b)))
                .collect();
            for q in &class[1..] {
                let input = runs[q.run].input();
                map.retain(|&b, v| input.value(b) == *v);
            }
            debug_assert_eq!(map.get(&agent), Some(&first.value(agent)));
            per_class.push(PrimitiveValueFormula::new(map).expect("own input is always known"));
        }
        let per_point = partition
            .class_of
            .iter()
            .map(|&c| per_class[c as usize].clone())
            .collect();
        out.push(per_point);
    }
    out
}

/// Computes, for every agent and point, the set of `init` atoms the agent
/// knows to be mutual knowledge: atoms that every agent knows at every point
/// of the agent's class. `None` encodes the empty set.
pub(crate) fn compute_v_star_sets(
    runs: &[Run],
    partitions: &[Partition],
    v_sets: &[Vec<PrimitiveValueFormula>],
    n_agents: u32,
) -> Vec<Vec<Option<PrimitiveValueFormula>>> {
    let times = runs[0].states().len();
    let point_count = runs.len() * times;

    // mutual-knowledge set per point: atoms every agent knows there
    let mut mutual: Vec<BTreeMap<AgentId, Value>> = Vec::with_capacity(point_count);
    for idx in 0..point_count {
        let mut map = v_sets[0][idx].assignment().clone();
        for per_agent in &v_sets[1..] {
            let other = per_agent[idx].assignment();
            map.retain(|b, v| other.get(b) == Some(v));
        }
        mutual.push(map);
    }

    let mut out = Vec::with_capacity(n_agents as usize);
    for agent in (1..=n_agents).map(AgentId::new) {
        let partition = &partitions[agent.slot()];
        let mut per_class: Vec<Option<PrimitiveValueFormula>> = Vec::with_capacity(partition.members.len());
        for class in &partition.members {
            let mut map = mutual[class[0].run * times + class[0].time as usize].clone();
            for q in &class[1..] {
                let m = &mutual[q.run * times + q.time as usize];
                map.retain(|b, v| m.get(b) == Some(v));
                if map.is_empty() {
                    break;
                }
            }
            per_class.push(PrimitiveValueFormula::new(map));
        }
        let per_point = partition
            .class_of
            .iter()
            .map(|&c| per_class[c as usize].clone())
            .collect();
        out.push(per_point);
    }
    out
}

/// One agent's epistemic situation at a point: its indistinguishability class
/// and the two derived knowledge sets, plus the choice they induce.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AgentSnapshot {
    pub agent: AgentId,
    pub class: Vec<Point>,
    pub known: PrimitiveValueFormula,
    pub mutually_known: Option<PrimitiveValueFormula>,
    pub choice: Option<Value>,
}

/// The epistemic state of every agent at one (run, time).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EpistemicSnapshot {
    pub point: Point,
    pub agents: Vec<AgentSnapshot>,
}

pub fn snapshot(system: &InterpretedSystem, run: usize, time: u32) -> EpistemicSnapshot {
    let point = Point { run, time };
    let agents = system
        .agents()
        .map(|a| AgentSnapshot {
            agent: a,
            class: system.indistinguishability_class(a, point).to_vec(),
            known: system.v_set(a, point).clone(),
            mutually_known: system.v_star_set(a, point).cloned(),
            choice: system.choice(a, point),
        })
        .collect();
    EpistemicSnapshot { point, agents }
}

/// Raised when a run's knowledge state has not stabilized within the
/// represented window.
#[derive(Debug, Clone, thiserror::Error)]
#[error(
    "no epistemic fixpoint within {total} represented rounds for run with input {input:?}, schedule {schedule:?}; increase the burn-in (currently {burn_in})"
)]
pub struct FixpointError {
    pub input: Vec<u32>,
    pub schedule: Vec<Vec<(u32, u32)>>,
    pub burn_in: u32,
    pub total: u32,
}

/// Finds, per run, the earliest time from which (a) every later round applies
/// the canonical tail pattern and (b) the per-agent knowledge sets and choice
/// outputs are constant through the end of the represented window.
pub(crate) fn detect_fixpoints(
    runs: &[Run],
    v_sets: &[Vec<PrimitiveValueFormula>],
    v_star_sets: &[Vec<Option<PrimitiveValueFormula>>],
    tail: &DropPattern,
    burn_in: u32,
    n_agents: u32,
) -> Result<Vec<u32>, FixpointError> {
    let times = runs[0].states().len();
    let last = (times - 1) as u32;
    let mut out = Vec::with_capacity(runs.len());
    for (run_idx, run) in runs.iter().enumerate() {
        // earliest time after the last round that deviates from the tail pattern
        let mut eligible_from = 0u32;
        for (i, pattern) in run.schedule().rounds().iter().enumerate() {
            if pattern != tail {
                eligible_from = i as u32 + 1;
            }
        }
        let stable_eq = |t: u32, u: u32| -> bool {
            (0..n_agents as usize).all(|a| {
                let pt = run_idx * times + t as usize;
                let pu = run_idx * times + u as usize;
                v_sets[a][pt] == v_sets[a][pu] && v_star_sets[a][pt] == v_star_sets[a][pu]
            })
        };
        let mut fixpoint = None;
        for t in eligible_from..last {
            if stable_eq(t, t + 1) {
                fixpoint = Some(t);
                break;
            }
        }
        let fixpoint = match fixpoint {
            Some(t) if ((t + 1)..=last).all(|u| stable_eq(t, u)) => t,
            _ => {
                return Err(FixpointError {
                    input: run.input().values().iter().map(|v| v.index()).collect(),
                    schedule: schedule_edges(run),
                    burn_in,
                    total: last,
                });
            }
        };
        out.push(fixpoint);
    }
    Ok(out)
}

pub(crate) fn schedule_edges(run: &Run) -> Vec<Vec<(u32, u32)>> {
    run.schedule()
        .rounds()
        .iter()
        .map(|p| p.edges().map(|&(s, r)| (s.index(), r.index())).collect())
        .collect()
}

/// Formula refers to an agent or value outside the scenario, or to a missing
/// run or time.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("agent {agent} out of range, scenario has agents 1..={n}")]
    AgentOutOfRange { agent: u32, n: u32 },
    #[error("value {value} out of range, scenario has values 0..={max}")]
    ValueOutOfRange { value: u32, max: u32 },
    #[error("run {run} out of range, system has {count} runs")]
    RunOutOfRange { run: usize, count: usize },
    #[error("time {time} out of range, runs are represented through time {last}")]
    TimeOutOfRange { time: u32, last: u32 },
}

fn validate(system: &InterpretedSystem, f: &Formula) -> Result<(), EvalError> {
    let n = system.n_agents();
    let k = system.n_values();
    let check_atom = |atom: &Atom| -> Result<(), EvalError> {
        let a = atom.agent().index();
        if a < 1 || a > n {
            return Err(EvalError::AgentOutOfRange { agent: a, n });
        }
        let v = atom.value().index();
        if v >= k {
            return Err(EvalError::ValueOutOfRange { value: v, max: k - 1 });
        }
        Ok(())
    };
    match f {
        Formula::Atom(a) => check_atom(a),
        Formula::Not(x) | Formula::Eventually(x) => validate(system, x),
        Formula::And(x, y) => {
            validate(system, x)?;
            validate(system, y)
        }
        Formula::Know(agent, x) => {
            let a = agent.index();
            if a < 1 || a > n {
                return Err(EvalError::AgentOutOfRange { agent: a, n });
            }
            validate(system, x)
        }
    }
}

fn check_point(system: &InterpretedSystem, point: Point) -> Result<(), EvalError> {
    if point.run >= system.run_count() {
        return Err(EvalError::RunOutOfRange { run: point.run, count: system.run_count() });
    }
    if point.time > system.last_time() {
        return Err(EvalError::TimeOutOfRange { time: point.time, last: system.last_time() });
    }
    Ok(())
}

/// Truth values of a formula at every point: one bit per (run, time) in
/// run-major order. Callers must have validated the formula's indices.
pub(crate) fn eval_bits(system: &InterpretedSystem, f: &Formula) -> Vec<bool> {
    let times = system.last_time() as usize + 1;
    match f {
        Formula::Atom(atom) => system.points().map(|p| system.atom_holds(p, atom)).collect(),
        Formula::Not(x) => {
            let mut bits = eval_bits(system, x);
            for b in &mut bits {
                *b = !*b;
            }
            bits
        }
        Formula::And(x, y) => {
            let mut bits = eval_bits(system, x);
            let right = eval_bits(system, y);
            for (b, r) in bits.iter_mut().zip(right) {
                *b &= r;
            }
            bits
        }
        Formula::Know(agent, x) => {
            let inner = eval_bits(system, x);
            let mut bits = vec![false; inner.len()];
            for class in &system.partition(*agent).members {
                let holds = class.iter().all(|&q| inner[system.point_index(q)]);
                if holds {
                    for &q in class {
                        bits[system.point_index(q)] = true;
                    }
                }
            }
            bits
        }
        Formula::Eventually(x) => {
            let mut bits = eval_bits(system, x);
            for run in 0..system.run_count() {
                let base = run * times;
                for t in (0..times - 1).rev() {
                    bits[base + t] = bits[base + t] || bits[base + t + 1];
                }
            }
            bits
        }
    }
}

/// Satisfaction at every point at once: one boolean per (run, time), indexed
/// by [`InterpretedSystem::point_index`]. One pass over the formula, so this
/// is the cheap way to scan a formula across the whole system.
pub fn eval_points(system: &InterpretedSystem, f: &Formula) -> Result<Vec<bool>, EvalError> {
    validate(system, f)?;
    Ok(eval_bits(system, f))
}

/// Satisfaction at a single point.
pub fn eval(system: &InterpretedSystem, point: Point, f: &Formula) -> Result<bool, EvalError> {
    validate(system, f)?;
    check_point(system, point)?;
    let bits = eval_bits(system, f);
    Ok(bits[system.point_index(point)])
}

/// Validity during a run: satisfaction at every represented time.
pub fn eval_run(system: &InterpretedSystem, run: usize, f: &Formula) -> Result<bool, EvalError> {
    validate(system, f)?;
    if run >= system.run_count() {
        return Err(EvalError::RunOutOfRange { run, count: system.run_count() });
    }
    let times = system.last_time() as usize + 1;
    let bits = eval_bits(system, f);
    Ok(bits[run * times..(run + 1) * times].iter().all(|&b| b))
}

/// Verdict of a system-wide validity check, with the first failing point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SystemVerdict {
    pub holds: bool,
    pub witness: Option<Point>,
}

/// Validity in the system: satisfaction at every point of every run. On
/// failure the earliest failing point (run-major order) is reported.
pub fn eval_system(system: &InterpretedSystem, f: &Formula) -> Result<SystemVerdict, EvalError> {
    validate(system, f)?;
    let bits = eval_bits(system, f);
    let witness = system.points().find(|&p| !bits[system.point_index(p)]);
    Ok(SystemVerdict { holds: witness.is_none(), witness })
}

/// The strongest primitive value formula the agent knows at a point, built by
/// the explicit construction: conjoin every known `init` atom. Nonempty for
/// every point of a well-formed system, since agents know their own input.
pub fn current_primitive_knowledge(
    system: &InterpretedSystem,
    agent: AgentId,
    point: Point,
) -> Option<PrimitiveValueFormula> {
    Some(system.v_set(agent, point).clone())
}

/// The strongest primitive value formula the agent ever knows on a run:
/// its current primitive knowledge at the run's fixpoint.
pub fn primitive_knowledge_limit(system: &InterpretedSystem, agent: AgentId, run: usize) -> PrimitiveValueFormula {
    let t = system.fixpoint_time(run);
    system.v_set(agent, Point { run, time: t }).clone()
}

/// The strongest primitive value formula the agent knows to be mutual
/// knowledge at a point, or `None` when it knows none to be mutual knowledge.
pub fn mutually_known_primitive(
    system: &InterpretedSystem,
    agent: AgentId,
    point: Point,
) -> Option<PrimitiveValueFormula> {
    system.v_star_set(agent, point).cloned()
}

/// The limit of the mutually-known primitive knowledge on a run, or `None`
/// when the agent never knows any mutual knowledge on it.
pub fn mutually_known_limit(system: &InterpretedSystem, agent: AgentId, run: usize) -> Option<PrimitiveValueFormula> {
    let t = system.fixpoint_time(run);
    system.v_star_set(agent, Point { run, time: t }).cloned()
}

/// One line of an evaluation trace: a subformula, its verdict at the probed
/// point, and the indistinguishability class size for knowledge nodes.
#[derive(Debug, Clone, Serialize)]
pub struct TraceLine {
    pub depth: usize,
    pub formula: String,
    pub verdict: bool,
    pub class_size: Option<usize>,
}

/// Evaluates every subformula at `point`, in syntactic (preorder) order.
pub fn explain(system: &InterpretedSystem, point: Point, f: &Formula) -> Result<Vec<TraceLine>, EvalError> {
    validate(system, f)?;
    check_point(system, point)?;
    let mut out = Vec::new();
    explain_node(system, point, f, 0, &mut out);
    Ok(out)
}

fn explain_node(system: &InterpretedSystem, point: Point, f: &Formula, depth: usize, out: &mut Vec<TraceLine>) {
    let bits = eval_bits(system, f);
    let class_size = match f {
        Formula::Know(agent, _) => Some(system.indistinguishability_class(*agent, point).len()),
        _ => None,
    };
    out.push(TraceLine {
        depth,
        formula: crate::formula::print(f),
        verdict: bits[system.point_index(point)],
        class_size,
    });
    match f {
        Formula::Atom(_) => {}
        Formula::Not(x) | Formula::Know(_, x) | Formula::Eventually(x) => {
            explain_node(system, point, x, depth + 1, out)
        }
        Formula::And(x, y) => {
            explain_node(system, point, x, depth + 1, out);
            explain_node(system, point, y, depth + 1, out);
        }
    }
}

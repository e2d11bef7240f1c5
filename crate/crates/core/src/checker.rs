//! Executable versions of the stable-choice, agreement, broadcaster, and
//! choice-rule conditions, plus the theorem verification that ties them
//! together: when every hypothesis condition passes, the agreement conditions
//! must pass too, and a counterexample aborts with a full dump.

use std::fmt;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::adversary::ScenarioEcho;
use crate::formula::{conj, disj, enumerate_phi, Formula, PrimitiveValueFormula};
use crate::model::{AgentId, Atom, InterpretedSystem, Value};
use crate::protocol::select_value;
use crate::semantics::{eval_bits, schedule_edges, Point};

/// The ten checkable conditions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ConditionId {
    /// Every agent eventually settles on some value forever.
    StableChoice,
    /// At most one chosen value per agent per point.
    ChoiceDeterminism,
    /// Agents know their own initial value.
    Introspection,
    /// Exactly one initial value per agent.
    UniqueInput,
    /// Knowledge of initial values never goes away.
    PerfectInputRecall,
    /// Some value is eventually decided by everyone.
    Agreement,
    /// Chosen values are known initial values of someone.
    Validity,
    /// Some agent's primitive knowledge always becomes depth-2 mutual knowledge.
    SecondDepthBroadcaster,
    /// The selection strategy only ever picks mentioned values.
    StrategyValidity,
    /// Agents with mutual knowledge choose the strategy's pick from the
    /// strongest mutually-known formula.
    LargestMutualChoice,
}

impl ConditionId {
    pub const ALL: [ConditionId; 10] = [
        ConditionId::StableChoice,
        ConditionId::ChoiceDeterminism,
        ConditionId::Introspection,
        ConditionId::UniqueInput,
        ConditionId::PerfectInputRecall,
        ConditionId::Agreement,
        ConditionId::Validity,
        ConditionId::SecondDepthBroadcaster,
        ConditionId::StrategyValidity,
        ConditionId::LargestMutualChoice,
    ];

    /// Hypotheses of the main verification: if all of these pass, the
    /// conclusions must pass as well.
    pub const HYPOTHESES: [ConditionId; 6] = [
        ConditionId::ChoiceDeterminism,
        ConditionId::Introspection,
        ConditionId::UniqueInput,
        ConditionId::PerfectInputRecall,
        ConditionId::SecondDepthBroadcaster,
        ConditionId::LargestMutualChoice,
    ];

    /// Derived conclusions: stable choice, agreement, validity.
    pub const CONCLUSIONS: [ConditionId; 3] = [
        ConditionId::StableChoice,
        ConditionId::Agreement,
        ConditionId::Validity,
    ];

    pub fn key(self) -> &'static str {
        match self {
            ConditionId::StableChoice => "stable-choice",
            ConditionId::ChoiceDeterminism => "choice-determinism",
            ConditionId::Introspection => "introspection",
            ConditionId::UniqueInput => "unique-input",
            ConditionId::PerfectInputRecall => "perfect-input-recall",
            ConditionId::Agreement => "agreement",
            ConditionId::Validity => "validity",
            ConditionId::SecondDepthBroadcaster => "second-depth-broadcaster",
            ConditionId::StrategyValidity => "strategy-validity",
            ConditionId::LargestMutualChoice => "largest-mutual-choice",
        }
    }

    pub fn from_key(key: &str) -> Option<ConditionId> {
        ConditionId::ALL.iter().copied().find(|c| c.key() == key)
    }
}

impl fmt::Display for ConditionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl Serialize for ConditionId {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.key())
    }
}

impl<'de> Deserialize<'de> for ConditionId {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        ConditionId::from_key(&s)
            .ok_or_else(|| serde::de::Error::custom(format!("unknown condition id '{s}'")))
    }
}

/// How the broadcaster condition quantifies its witnessing agent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BroadcasterMode {
    /// Each run may have its own witnessing agent (default).
    #[default]
    Lenient,
    /// A single agent must validate the schema at every point of every run.
    Strict,
}

impl fmt::Display for BroadcasterMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BroadcasterMode::Lenient => f.write_str("lenient"),
            BroadcasterMode::Strict => f.write_str("strict"),
        }
    }
}

impl std::str::FromStr for BroadcasterMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "lenient" => Ok(BroadcasterMode::Lenient),
            "strict" => Ok(BroadcasterMode::Strict),
            other => Err(format!("unknown mode '{other}', expected lenient or strict")),
        }
    }
}

/// A replayable counterexample: the run's coordinates plus the offending
/// point, enough to rebuild the violation without storing state sequences.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    pub run_index: usize,
    pub input: Vec<u32>,
    pub schedule: Vec<Vec<(u32, u32)>>,
    pub time: Option<u32>,
    pub agent: Option<u32>,
    pub detail: String,
}

impl Witness {
    fn at_point(system: &InterpretedSystem, point: Point, agent: Option<AgentId>, detail: String) -> Self {
        let run = &system.runs()[point.run];
        Witness {
            run_index: point.run,
            input: run.input().values().iter().map(|v| v.index()).collect(),
            schedule: schedule_edges(run),
            time: Some(point.time),
            agent: agent.map(AgentId::index),
            detail,
        }
    }

    fn at_run(system: &InterpretedSystem, run_index: usize, detail: String) -> Self {
        let run = &system.runs()[run_index];
        Witness {
            run_index,
            input: run.input().values().iter().map(|v| v.index()).collect(),
            schedule: schedule_edges(run),
            time: None,
            agent: None,
            detail,
        }
    }
}

/// Outcome of checking one condition.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConditionVerdict {
    pub id: ConditionId,
    pub pass: bool,
    pub points_checked: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl ConditionVerdict {
    fn pass(id: ConditionId, points_checked: u64) -> Self {
        ConditionVerdict { id, pass: true, points_checked, witness: None, note: None }
    }

    fn fail(id: ConditionId, points_checked: u64, witness: Witness) -> Self {
        ConditionVerdict { id, pass: false, points_checked, witness: Some(witness), note: None }
    }

    fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

/// The fixed formula schema behind a condition, instantiated for `n` agents
/// and `k` values. `None` for the three conditions that are not checked as a
/// single closed formula (broadcaster, strategy validity, largest mutual
/// choice) and for schemas that are vacuously true at these parameters.
pub fn condition_formula(id: ConditionId, n: u32, k: u32) -> Option<Formula> {
    let agents = || (1..=n).map(AgentId::new);
    let values = || (0..k).map(Value::new);
    match id {
        ConditionId::StableChoice => conj(agents().map(|a| {
            disj(values().map(|v| Formula::eventually(Formula::decide(a, v)))).expect("k >= 1")
        })),
        ConditionId::ChoiceDeterminism => conj(agents().flat_map(|a| {
            values().flat_map(move |v| {
                values().filter(move |&w| w != v).map(move |w| {
                    Formula::implies(
                        Formula::Atom(Atom::Choose(a, v)),
                        Formula::not(Formula::Atom(Atom::Choose(a, w))),
                    )
                })
            })
        })),
        ConditionId::Introspection => conj(agents().flat_map(|a| {
            values().map(move |v| {
                let atom = Formula::Atom(Atom::Init(a, v));
                Formula::implies(atom.clone(), Formula::know(a, atom))
            })
        })),
        ConditionId::UniqueInput => conj(agents().map(|a| {
            disj(values().map(|v| {
                let this = Formula::Atom(Atom::Init(a, v));
                let others = conj(
                    values()
                        .filter(move |&w| w != v)
                        .map(|w| Formula::not(Formula::Atom(Atom::Init(a, w)))),
                );
                match others {
                    Some(rest) => Formula::and(this, rest),
                    None => this,
                }
            }))
            .expect("k >= 1")
        })),
        ConditionId::PerfectInputRecall => conj(agents().flat_map(|a| {
            enumerate_phi(n, k).into_iter().map(move |phi| {
                let known = Formula::know(a, phi.to_formula());
                Formula::implies(known.clone(), Formula::always(known))
            })
        })),
        ConditionId::Agreement => disj(values().map(|v| {
            conj(agents().map(|a| Formula::eventually(Formula::decide(a, v)))).expect("n >= 1")
        })),
        ConditionId::Validity => conj(agents().flat_map(|a| {
            values().map(move |v| {
                Formula::implies(
                    Formula::Atom(Atom::Choose(a, v)),
                    Formula::know(
                        a,
                        disj((1..=n).map(|b| Formula::Atom(Atom::Init(AgentId::new(b), v)))).expect("n >= 1"),
                    ),
                )
            })
        })),
        ConditionId::SecondDepthBroadcaster
        | ConditionId::StrategyValidity
        | ConditionId::LargestMutualChoice => None,
    }
}

/// Per-agent broadcaster schema: everything the agent knows from the
/// primitive fragment eventually becomes depth-2 mutual knowledge.
pub fn broadcaster_schema(n: u32, k: u32, agent: AgentId) -> Formula {
    conj(enumerate_phi(n, k).into_iter().map(|phi| {
        let body = phi.to_formula();
        Formula::implies(
            Formula::know(agent, body.clone()),
            Formula::eventually(Formula::mutual(n, Formula::mutual(n, body))),
        )
    }))
    .expect("phi is nonempty")
}

/// For each run, the first agent whose broadcaster schema is valid throughout
/// the run; `None` when no agent validates it.
pub fn broadcaster_witnesses(system: &InterpretedSystem) -> Vec<Option<AgentId>> {
    let n = system.n_agents();
    let k = system.n_values();
    let times = system.last_time() as usize + 1;
    let per_agent: Vec<Vec<bool>> = system
        .agents()
        .map(|a| eval_bits(system, &broadcaster_schema(n, k, a)))
        .collect();
    (0..system.run_count())
        .map(|run| {
            system.agents().find(|a| {
                per_agent[a.slot()][run * times..(run + 1) * times]
                    .iter()
                    .all(|&b| b)
            })
        })
        .collect()
}

/// Strategy validity over the full primitive fragment, with the selection
/// function injectable so broken strategies are detectable in tests.
pub fn check_strategy_validity_with(
    n: u32,
    k: u32,
    select: &dyn Fn(&PrimitiveValueFormula) -> Value,
) -> Result<usize, PrimitiveValueFormula> {
    let phi_all = enumerate_phi(n, k);
    let count = phi_all.len();
    for phi in phi_all {
        let picked = select(&phi);
        if !phi.values().any(|v| v == picked) {
            return Err(phi);
        }
    }
    Ok(count)
}

/// Checks one condition over the whole system, returning a verdict with a
/// replayable witness on failure.
pub fn check_condition(system: &InterpretedSystem, id: ConditionId, mode: BroadcasterMode) -> ConditionVerdict {
    let n = system.n_agents();
    let k = system.n_values();
    let point_count = system.point_count() as u64;
    match id {
        ConditionId::SecondDepthBroadcaster => match mode {
            BroadcasterMode::Lenient => {
                let note = "implication schema checked at every represented point; per-run witnessing agent (lenient mode)";
                let witnesses = broadcaster_witnesses(system);
                match witnesses.iter().position(|w| w.is_none()) {
                    None => ConditionVerdict::pass(id, system.run_count() as u64).with_note(note),
                    Some(run) => ConditionVerdict::fail(
                        id,
                        system.run_count() as u64,
                        Witness::at_run(
                            system,
                            run,
                            "no agent's knowledge always becomes depth-2 mutual knowledge on this run".into(),
                        ),
                    )
                    .with_note(note),
                }
            }
            BroadcasterMode::Strict => {
                let mut first_failure: Option<(AgentId, Point)> = None;
                for a in system.agents() {
                    let bits = eval_bits(system, &broadcaster_schema(n, k, a));
                    match system.points().find(|&p| !bits[system.point_index(p)]) {
                        None => {
                            return ConditionVerdict::pass(id, point_count).with_note(format!(
                                "agent {a} validates the schema at every point (strict mode)"
                            ));
                        }
                        Some(p) => {
                            first_failure.get_or_insert((a, p));
                        }
                    }
                }
                let (agent, point) = first_failure.expect("n >= 1");
                ConditionVerdict::fail(
                    id,
                    point_count,
                    Witness::at_point(
                        system,
                        point,
                        Some(agent),
                        "no single agent validates the schema everywhere; earliest failure shown".into(),
                    ),
                )
                .with_note("single system-wide agent required (strict mode)")
            }
        },
        ConditionId::StrategyValidity => {
            let strategy = system.scenario().strategy.clone();
            match check_strategy_validity_with(n, k, &move |phi| select_value(&strategy, phi)) {
                Ok(count) => ConditionVerdict::pass(id, count as u64),
                Err(phi) => {
                    let run = 0;
                    ConditionVerdict::fail(
                        id,
                        enumerate_phi(n, k).len() as u64,
                        Witness::at_run(system, run, format!("strategy picks a value outside {phi}")),
                    )
                }
            }
        }
        ConditionId::LargestMutualChoice => {
            let strategy = &system.scenario().strategy;
            for p in system.points() {
                for a in system.agents() {
                    if let Some(phi_star) = system.v_star_set(a, p) {
                        let expected = select_value(strategy, phi_star);
                        if !system.atom_holds(p, &Atom::Choose(a, expected)) {
                            return ConditionVerdict::fail(
                                id,
                                point_count,
                                Witness::at_point(
                                    system,
                                    p,
                                    Some(a),
                                    format!(
                                        "mutual knowledge {phi_star} demands choosing {expected}, agent chooses {:?}",
                                        system.choice(a, p).map(|v| v.index())
                                    ),
                                ),
                            );
                        }
                    }
                }
            }
            ConditionVerdict::pass(id, point_count)
        }
        _ => {
            let Some(formula) = condition_formula(id, n, k) else {
                return ConditionVerdict::pass(id, 0).with_note("schema vacuous at these parameters");
            };
            let bits = eval_bits(system, &formula);
            match system.points().find(|&p| !bits[system.point_index(p)]) {
                None => ConditionVerdict::pass(id, point_count),
                Some(p) => {
                    let detail = format!("condition {} fails here", id.key());
                    ConditionVerdict::fail(id, point_count, Witness::at_point(system, p, None, detail))
                }
            }
        }
    }
}

/// Summary of the hypothesis/conclusion structure of a verification.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TheoremSummary {
    pub hypotheses: Vec<ConditionId>,
    pub hypotheses_pass: bool,
    pub conclusions: Vec<ConditionId>,
    /// `None` when the hypotheses fail: nothing is asserted then.
    pub conclusions_pass: Option<bool>,
    pub note: String,
}

/// Wall-clock breakdown. Excluded, along with the timestamp, from the
/// byte-determinism contract of reports.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Timings {
    pub build_ms: u64,
    pub check_ms: u64,
}

/// Machine-readable verification report with a versioned schema. Two runs on
/// the same inputs produce identical reports except for `generated_at_unix_ms`
/// and `timings_ms`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckReport {
    pub schema_version: u32,
    pub generated_at_unix_ms: u64,
    pub scenario: ScenarioEcho,
    pub mode: BroadcasterMode,
    pub run_count: usize,
    pub point_count: usize,
    pub conditions: Vec<ConditionVerdict>,
    pub theorem: TheoremSummary,
    pub timings_ms: Timings,
}

impl CheckReport {
    pub fn all_pass(&self) -> bool {
        self.conditions.iter().all(|c| c.pass)
    }

    pub fn condition(&self, id: ConditionId) -> &ConditionVerdict {
        self.conditions
            .iter()
            .find(|c| c.id == id)
            .expect("report covers all conditions")
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization is infallible")
    }
}

/// A system that satisfies every hypothesis but violates a conclusion. This
/// should be impossible; it means an implementation bug or a genuine
/// counterexample, and either way deserves the full dump.
#[derive(Debug, Clone, thiserror::Error)]
#[error("hypotheses hold but conclusion '{failed}' fails; full report:\n{dump}")]
pub struct TheoremRefutation {
    pub failed: ConditionId,
    pub report: Box<CheckReport>,
    pub dump: String,
}

fn now_unix_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

/// Checks all ten conditions and the hypothesis/conclusion implication. When
/// every hypothesis passes but a conclusion fails, returns the refutation
/// carrying the complete report.
pub fn verify_theorem(system: &InterpretedSystem, mode: BroadcasterMode) -> Result<CheckReport, TheoremRefutation> {
    let started = std::time::Instant::now();
    let conditions: Vec<ConditionVerdict> = ConditionId::ALL
        .iter()
        .map(|&id| check_condition(system, id, mode))
        .collect();
    let by_id = |id: ConditionId| conditions.iter().find(|c| c.id == id).expect("all checked");
    let hypotheses_pass = ConditionId::HYPOTHESES.iter().all(|&id| by_id(id).pass);
    let conclusions_pass = hypotheses_pass.then(|| ConditionId::CONCLUSIONS.iter().all(|&id| by_id(id).pass));
    let note = match (hypotheses_pass, conclusions_pass) {
        (true, Some(true)) => "hypotheses hold and the system stabilizes on a common value".to_string(),
        (true, _) => "hypotheses hold but a conclusion fails".to_string(),
        (false, _) => "hypotheses fail; nothing is asserted about the conclusions".to_string(),
    };
    let report = CheckReport {
        schema_version: 1,
        generated_at_unix_ms: now_unix_ms(),
        scenario: ScenarioEcho::from(system.scenario()),
        mode,
        run_count: system.run_count(),
        point_count: system.point_count(),
        conditions,
        theorem: TheoremSummary {
            hypotheses: ConditionId::HYPOTHESES.to_vec(),
            hypotheses_pass,
            conclusions: ConditionId::CONCLUSIONS.to_vec(),
            conclusions_pass,
            note,
        },
        timings_ms: Timings { build_ms: 0, check_ms: started.elapsed().as_millis() as u64 },
    };
    if hypotheses_pass {
        if let Some(&failed) = ConditionId::CONCLUSIONS
            .iter()
            .find(|&&id| !report.condition(id).pass)
        {
            let dump = report.to_json_pretty();
            return Err(TheoremRefutation { failed, report: Box::new(report), dump });
        }
    }
    Ok(report)
}

/// The single value every agent eventually decides on this run, if any.
pub fn agreement_value(system: &InterpretedSystem, run: usize) -> Option<Value> {
    let p = Point { run, time: system.fixpoint_time(run) };
    let mut choices = system.agents().map(|a| system.choice(a, p));
    let first = choices.next().expect("n >= 1")?;
    for c in choices {
        if c? != first {
            return None;
        }
    }
    Some(first)
}

/// The intermediate structure of a successful verification on one run: the
/// witnessing agent, its limit knowledge, and the time from which that limit
/// is depth-2 mutual knowledge, every agent's mutually-known limit equals it,
/// and every choice equals the strategy's pick from it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProofProbe {
    pub broadcaster: AgentId,
    pub limit: PrimitiveValueFormula,
    pub stable_from: u32,
}

#[derive(Debug, Clone, thiserror::Error)]
pub enum ProbeFailure {
    #[error("run {run}: no broadcaster agent")]
    NoBroadcaster { run: usize },
    #[error("run {run}: agent {agent}'s limit knowledge never becomes depth-2 mutual knowledge")]
    NeverMutual { run: usize, agent: AgentId },
    #[error("run {run}, t={time}: agent {agent}'s mutually-known formula is {actual:?}, expected {expected}")]
    MutualLimitMismatch {
        run: usize,
        time: u32,
        agent: AgentId,
        expected: PrimitiveValueFormula,
        actual: Option<PrimitiveValueFormula>,
    },
    #[error("run {run}, t={time}: agent {agent} chooses {actual:?}, expected {expected}")]
    ChoiceMismatch {
        run: usize,
        time: u32,
        agent: AgentId,
        expected: Value,
        actual: Option<Value>,
    },
}

/// Verifies, on one run, that the broadcaster's limit knowledge becomes
/// depth-2 mutual knowledge, pins every agent's mutually-known formula from
/// then on, and fixes every later choice.
pub fn probe_proof_structure(
    system: &InterpretedSystem,
    run: usize,
    broadcaster: AgentId,
) -> Result<ProofProbe, ProbeFailure> {
    let n = system.n_agents();
    let limit = crate::semantics::primitive_knowledge_limit(system, broadcaster, run);
    let depth2 = Formula::mutual(n, Formula::mutual(n, limit.to_formula()));
    let bits = eval_bits(system, &depth2);
    let times = system.last_time() as usize + 1;
    let stable_from = (0..times as u32)
        .find(|&t| bits[run * times + t as usize])
        .ok_or(ProbeFailure::NeverMutual { run, agent: broadcaster })?;
    let expected_choice = select_value(&system.scenario().strategy, &limit);
    for t in stable_from..=system.last_time() {
        let p = Point { run, time: t };
        for agent in system.agents() {
            let actual = system.v_star_set(agent, p);
            if actual != Some(&limit) {
                return Err(ProbeFailure::MutualLimitMismatch {
                    run,
                    time: t,
                    agent,
                    expected: limit.clone(),
                    actual: actual.cloned(),
                });
            }
            let choice = system.choice(agent, p);
            if choice != Some(expected_choice) {
                return Err(ProbeFailure::ChoiceMismatch {
                    run,
                    time: t,
                    agent,
                    expected: expected_choice,
                    actual: choice,
                });
            }
        }
    }
    Ok(ProofProbe { broadcaster, limit, stable_from })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adversary::{enumerate_runs, AdversaryFamily, AdversarySpec, InputsSpec, Scenario};
    use crate::model::InputAssignment;
    use crate::protocol::Strategy;
    use crate::semantics::eval_run;

    fn two_generals(strategy: Strategy) -> InterpretedSystem {
        enumerate_runs(&Scenario {
            agents: 2,
            values: 2,
            inputs: InputsSpec::All,
            adversary: AdversarySpec { family: AdversaryFamily::MaxDropsPerRound(1), fair_tail: true },
            horizon: 3,
            burn_in: 6,
            strategy,
            budget: 1_000_000,
        })
        .unwrap()
    }

    fn no_comm() -> InterpretedSystem {
        enumerate_runs(&Scenario {
            agents: 2,
            values: 2,
            inputs: InputsSpec::All,
            adversary: AdversarySpec { family: AdversaryFamily::Unrestricted, fair_tail: false },
            horizon: 2,
            burn_in: 6,
            strategy: Strategy::Min,
            budget: 1_000_000,
        })
        .unwrap()
    }

    #[test]
    fn two_generals_all_conditions_pass() {
        let sys = two_generals(Strategy::Min);
        for id in ConditionId::ALL {
            let verdict = check_condition(&sys, id, BroadcasterMode::Lenient);
            assert!(verdict.pass, "{id} failed: {:?}", verdict.witness);
        }
    }

    #[test]
    fn two_generals_passes_strict_mode_too() {
        let sys = two_generals(Strategy::Min);
        let verdict = check_condition(&sys, ConditionId::SecondDepthBroadcaster, BroadcasterMode::Strict);
        assert!(verdict.pass);
    }

    #[test]
    fn two_generals_theorem_verdict() {
        let sys = two_generals(Strategy::Min);
        let report = verify_theorem(&sys, BroadcasterMode::Lenient).expect("no refutation");
        assert!(report.theorem.hypotheses_pass);
        assert_eq!(report.theorem.conclusions_pass, Some(true));
        assert!(report.all_pass());
        assert_eq!(report.run_count, 108);
    }

    #[test]
    fn strategy_swap_only_changes_the_agreed_value() {
        let min_sys = two_generals(Strategy::Min);
        let max_sys = two_generals(Strategy::Max);
        assert!(verify_theorem(&min_sys, BroadcasterMode::Lenient).unwrap().all_pass());
        assert!(verify_theorem(&max_sys, BroadcasterMode::Lenient).unwrap().all_pass());
        let mixed_input = InputAssignment::new(2, vec![Value::new(0), Value::new(1)]).unwrap();
        for run in 0..min_sys.run_count() {
            let vmin = agreement_value(&min_sys, run).expect("agreement holds");
            let vmax = agreement_value(&max_sys, run).expect("agreement holds");
            if min_sys.input(run) == &mixed_input {
                assert_eq!(vmin, Value::new(0));
                assert_eq!(vmax, Value::new(1));
            }
            if min_sys.input(run).values().iter().all(|&v| v == Value::new(1)) {
                // validity forces the only existing value
                assert_eq!(vmin, Value::new(1));
                assert_eq!(vmax, Value::new(1));
            }
        }
    }

    #[test]
    fn agreement_value_matches_broadcaster_limit() {
        let sys = two_generals(Strategy::Min);
        for (run, witness) in broadcaster_witnesses(&sys).iter().enumerate() {
            let a = witness.expect("two-generals always has a broadcaster");
            let limit = crate::semantics::primitive_knowledge_limit(&sys, a, run);
            let expected = select_value(&Strategy::Min, &limit);
            assert_eq!(agreement_value(&sys, run), Some(expected));
        }
    }

    #[test]
    fn negative_control_fails_where_expected() {
        let sys = no_comm();
        let broadcaster = check_condition(&sys, ConditionId::SecondDepthBroadcaster, BroadcasterMode::Lenient);
        assert!(!broadcaster.pass);
        let witness = broadcaster.witness.expect("witness on failure");
        assert_eq!(witness.input.len(), 2);

        // the all-drop run never chooses, so stable choice fails on it
        let all_drop = sys
            .runs()
            .iter()
            .position(|r| r.schedule().rounds().iter().all(|p| p.len() == 2))
            .unwrap();
        let schema = condition_formula(ConditionId::StableChoice, 2, 2).unwrap();
        assert!(!eval_run(&sys, all_drop, &schema).unwrap());
        assert_eq!(agreement_value(&sys, all_drop), None);

        let report = verify_theorem(&sys, BroadcasterMode::Lenient).expect("failing hypotheses never refute");
        assert!(!report.theorem.hypotheses_pass);
        assert_eq!(report.theorem.conclusions_pass, None);
        assert!(!check_condition(&sys, ConditionId::SecondDepthBroadcaster, BroadcasterMode::Strict).pass);
    }

    #[test]
    fn broken_strategy_is_caught() {
        // constant value 1 is outside singleton formulas over value 0
        let result = check_strategy_validity_with(2, 2, &|_| Value::new(1));
        let offending = result.unwrap_err();
        assert!(offending.values().all(|v| v != Value::new(1)));
    }

    #[test]
    fn valid_strategies_pass_the_injectable_check() {
        for strat in [Strategy::Min, Strategy::Max] {
            let s = strat.clone();
            assert_eq!(check_strategy_validity_with(2, 2, &move |phi| select_value(&s, phi)), Ok(8));
        }
    }

    #[test]
    fn proof_probes_hold_on_two_generals() {
        let sys = two_generals(Strategy::Min);
        for (run, witness) in broadcaster_witnesses(&sys).iter().enumerate() {
            let a = witness.expect("broadcaster exists");
            let probe = probe_proof_structure(&sys, run, a).expect("probe holds");
            assert!(probe.stable_from <= sys.last_time());
            assert_eq!(probe.limit, sys.input(run).as_pvf());
        }
    }

    #[test]
    fn report_serializes_and_round_trips() {
        let sys = two_generals(Strategy::Min);
        let report = verify_theorem(&sys, BroadcasterMode::Lenient).unwrap();
        let json = report.to_json_pretty();
        let back: CheckReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, report);
        assert_eq!(back.schema_version, 1);
    }

    #[test]
    fn explicit_pattern_family_verifies() {
        // the adversary may only silence agent 1's outbound link
        let sys = enumerate_runs(&Scenario {
            agents: 2,
            values: 2,
            inputs: InputsSpec::All,
            adversary: AdversarySpec {
                family: AdversaryFamily::ExplicitPatterns(vec![
                    crate::model::DropPattern::empty(),
                    crate::model::DropPattern::from_edges([(AgentId::new(1), AgentId::new(2))]),
                ]),
                fair_tail: true,
            },
            horizon: 2,
            burn_in: 6,
            strategy: Strategy::Min,
            budget: 1_000_000,
        })
        .unwrap();
        assert_eq!(sys.run_count(), 16); // 4 inputs x 2^2 schedules
        let report = verify_theorem(&sys, BroadcasterMode::Lenient).unwrap();
        assert!(report.all_pass(), "{}", report.to_json_pretty());
    }

    #[test]
    fn unrestricted_with_fair_tail_still_stabilizes() {
        let sys = enumerate_runs(&Scenario {
            agents: 2,
            values: 2,
            inputs: InputsSpec::All,
            adversary: AdversarySpec { family: AdversaryFamily::Unrestricted, fair_tail: true },
            horizon: 2,
            burn_in: 6,
            strategy: Strategy::Min,
            budget: 1_000_000,
        })
        .unwrap();
        assert_eq!(sys.run_count(), 64);
        let report = verify_theorem(&sys, BroadcasterMode::Lenient).unwrap();
        assert!(report.all_pass(), "{}", report.to_json_pretty());
        assert!(check_condition(&sys, ConditionId::SecondDepthBroadcaster, BroadcasterMode::Strict).pass);
    }

    #[test]
    fn single_value_scenario_is_trivially_consistent() {
        let sys = enumerate_runs(&Scenario {
            agents: 2,
            values: 1,
            inputs: InputsSpec::All,
            adversary: AdversarySpec { family: AdversaryFamily::MaxDropsPerRound(1), fair_tail: true },
            horizon: 2,
            burn_in: 6,
            strategy: Strategy::Min,
            budget: 1_000_000,
        })
        .unwrap();
        let determinism = check_condition(&sys, ConditionId::ChoiceDeterminism, BroadcasterMode::Lenient);
        assert!(determinism.pass);
        assert_eq!(determinism.note.as_deref(), Some("schema vacuous at these parameters"));
        let report = verify_theorem(&sys, BroadcasterMode::Lenient).unwrap();
        assert!(report.all_pass());
        for run in 0..sys.run_count() {
            assert_eq!(agreement_value(&sys, run), Some(Value::new(0)));
        }
    }

    #[test]
    fn custom_strategy_agrees_on_preferred_value() {
        let sys = two_generals(Strategy::Custom(vec![Value::new(1), Value::new(0)]));
        let report = verify_theorem(&sys, BroadcasterMode::Lenient).unwrap();
        assert!(report.all_pass());
        let mixed = InputAssignment::new(2, vec![Value::new(0), Value::new(1)]).unwrap();
        for run in 0..sys.run_count() {
            if sys.input(run) == &mixed {
                assert_eq!(agreement_value(&sys, run), Some(Value::new(1)));
            }
        }
    }
}

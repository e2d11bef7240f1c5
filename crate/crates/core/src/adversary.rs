//! Scenario description, adversary pattern families, and exhaustive
//! enumeration of the run set that constitutes the interpreted system.
//!
//! The adversary controls communication only: each round it picks one of its
//! allowed drop patterns. Runs are every (input, schedule) combination in a
//! deterministic order, so run identifiers are stable across invocations.

use serde::{Deserialize, Serialize};

use crate::model::{
    simulate, AgentId, ConfigError, DropPattern, InputAssignment, InterpretedSystem, Run, Schedule, Value,
};
use crate::protocol::{choices_from_v_star, Strategy, StrategyError};
use crate::semantics::{build_partitions, compute_v_sets, compute_v_star_sets, detect_fixpoints, FixpointError};

/// Which drop patterns the adversary may pick each round.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AdversaryFamily {
    /// Any set of at most `m` directed edges per round.
    MaxDropsPerRound(u32),
    /// Exactly the listed patterns.
    ExplicitPatterns(Vec<DropPattern>),
    /// Any set of directed edges, including all of them.
    Unrestricted,
}

/// Adversary family plus tail behaviour. With `fair_tail`, the rounds beyond
/// the horizon deliver everything; without it they drop everything, which
/// models runs where communication never succeeds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdversarySpec {
    pub family: AdversaryFamily,
    pub fair_tail: bool,
}

impl AdversarySpec {
    pub fn tail_pattern(&self, n_agents: u32) -> DropPattern {
        if self.fair_tail {
            DropPattern::empty()
        } else {
            DropPattern::all_edges(n_agents)
        }
    }
}

/// Which input assignments the enumeration covers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InputsSpec {
    /// All `k^n` assignments, so initial values are genuinely unknown.
    All,
    /// An explicit list. Restricting inputs changes the knowledge structure.
    Explicit(Vec<InputAssignment>),
}

/// Complete description of one model-checking problem.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scenario {
    pub agents: u32,
    pub values: u32,
    pub inputs: InputsSpec,
    pub adversary: AdversarySpec,
    pub horizon: u32,
    pub burn_in: u32,
    pub strategy: Strategy,
    pub budget: u64,
}

pub const DEFAULT_BUDGET: u64 = 1_000_000;

/// Default burn-in: generous room for depth-2 knowledge of all stable facts
/// to propagate and be observed stable.
pub fn default_burn_in(n_agents: u32) -> u32 {
    2 * (n_agents + 1)
}

impl Scenario {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.agents < 1 {
            return Err(ScenarioError::field("agents", "must be at least 1"));
        }
        if self.values < 1 {
            return Err(ScenarioError::field("values", "must be at least 1"));
        }
        if self.burn_in < 1 {
            return Err(ScenarioError::field(
                "burn_in",
                "must be at least 1; the represented tail must reach past the horizon",
            ));
        }
        if let AdversaryFamily::ExplicitPatterns(patterns) = &self.adversary.family {
            if patterns.is_empty() {
                return Err(ScenarioError::field("adversary.patterns", "must list at least one pattern"));
            }
            for (i, p) in patterns.iter().enumerate() {
                p.validate(self.agents)
                    .map_err(|e| ScenarioError::field(format!("adversary.patterns[{i}]"), e.to_string()))?;
                if patterns[..i].contains(p) {
                    return Err(ScenarioError::field(
                        format!("adversary.patterns[{i}]"),
                        "duplicate pattern would duplicate runs",
                    ));
                }
            }
        }
        if let InputsSpec::Explicit(list) = &self.inputs {
            if list.is_empty() {
                return Err(ScenarioError::field("inputs", "must list at least one assignment"));
            }
            for (i, input) in list.iter().enumerate() {
                if input.n_agents() != self.agents {
                    return Err(ScenarioError::field(
                        format!("inputs[{i}]"),
                        format!("covers {} agents, scenario has {}", input.n_agents(), self.agents),
                    ));
                }
                for v in input.values() {
                    if v.index() >= self.values {
                        return Err(ScenarioError::field(
                            format!("inputs[{i}]"),
                            format!("value {} out of range 0..{}", v.index(), self.values),
                        ));
                    }
                }
                if list[..i].contains(input) {
                    return Err(ScenarioError::field(
                        format!("inputs[{i}]"),
                        "duplicate assignment would duplicate runs",
                    ));
                }
            }
        }
        self.strategy
            .validate(self.values)
            .map_err(|e| ScenarioError::field("strategy", e.to_string()))?;
        Ok(())
    }

    /// The concrete input assignments the enumeration covers, in input order.
    pub fn input_assignments(&self) -> Vec<InputAssignment> {
        match &self.inputs {
            InputsSpec::Explicit(list) => list.clone(),
            InputsSpec::All => {
                let n = self.agents as usize;
                let k = self.values;
                let mut out = Vec::new();
                let mut digits = vec![0u32; n];
                loop {
                    let values = digits.iter().map(|&d| Value::new(d)).collect();
                    out.push(InputAssignment::new(self.agents, values).expect("arity matches"));
                    // increment with agent 1 as the most significant digit
                    let mut i = n;
                    loop {
                        if i == 0 {
                            return out;
                        }
                        i -= 1;
                        digits[i] += 1;
                        if digits[i] < k {
                            break;
                        }
                        digits[i] = 0;
                    }
                }
            }
        }
    }
}

/// Scenario ingestion or validation failure, with the offending field.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ScenarioError {
    #[error("scenario file: {0}")]
    Toml(String),
    #[error("scenario field {field}: {message}")]
    Field { field: String, message: String },
}

impl ScenarioError {
    fn field(field: impl Into<String>, message: impl Into<String>) -> Self {
        ScenarioError::Field { field: field.into(), message: message.into() }
    }
}

impl From<StrategyError> for ScenarioError {
    fn from(e: StrategyError) -> Self {
        ScenarioError::field("strategy", e.to_string())
    }
}

/// On-disk scenario schema. Structured text (TOML), documented in the README.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct ScenarioFile {
    agents: u32,
    values: u32,
    #[serde(default)]
    inputs: InputsField,
    adversary: AdversaryTable,
    horizon: u32,
    #[serde(default)]
    burn_in: Option<u32>,
    strategy: String,
    #[serde(default)]
    budget: Option<u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum InputsField {
    Keyword(String),
    Explicit(Vec<Vec<u32>>),
}

impl Default for InputsField {
    fn default() -> Self {
        InputsField::Keyword("all".to_string())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct AdversaryTable {
    family: String,
    #[serde(default)]
    m: Option<u32>,
    #[serde(default)]
    patterns: Option<Vec<Vec<(u32, u32)>>>,
    #[serde(default = "default_true")]
    fair_tail: bool,
}

fn default_true() -> bool {
    true
}

impl Scenario {
    /// Parses the scenario file format and validates every field.
    pub fn from_toml_str(text: &str) -> Result<Scenario, ScenarioError> {
        let file: ScenarioFile = toml::from_str(text).map_err(|e| ScenarioError::Toml(e.to_string()))?;
        let family = match file.adversary.family.as_str() {
            "max-drops" => {
                let m = file
                    .adversary
                    .m
                    .ok_or_else(|| ScenarioError::field("adversary.m", "required for family \"max-drops\""))?;
                AdversaryFamily::MaxDropsPerRound(m)
            }
            "explicit" => {
                let raw = file.adversary.patterns.ok_or_else(|| {
                    ScenarioError::field("adversary.patterns", "required for family \"explicit\"")
                })?;
                let patterns = raw
                    .into_iter()
                    .map(|edges| {
                        DropPattern::from_edges(
                            edges
                                .into_iter()
                                .map(|(s, r)| (AgentId::new(s.max(1)), AgentId::new(r.max(1)))),
                        )
                    })
                    .collect();
                AdversaryFamily::ExplicitPatterns(patterns)
            }
            "unrestricted" => AdversaryFamily::Unrestricted,
            other => {
                return Err(ScenarioError::field(
                    "adversary.family",
                    format!("unknown family \"{other}\", expected max-drops, explicit, or unrestricted"),
                ));
            }
        };
        let inputs = match file.inputs {
            InputsField::Keyword(kw) if kw == "all" => InputsSpec::All,
            InputsField::Keyword(kw) => {
                return Err(ScenarioError::field("inputs", format!("unknown keyword \"{kw}\", expected \"all\" or a list")));
            }
            InputsField::Explicit(rows) => {
                let mut list = Vec::with_capacity(rows.len());
                for (i, row) in rows.into_iter().enumerate() {
                    let values = row.into_iter().map(Value::new).collect();
                    let input = InputAssignment::new(file.agents, values)
                        .map_err(|e: ConfigError| ScenarioError::field(format!("inputs[{i}]"), e.to_string()))?;
                    list.push(input);
                }
                InputsSpec::Explicit(list)
            }
        };
        let strategy: Strategy = file.strategy.parse()?;
        let scenario = Scenario {
            agents: file.agents,
            values: file.values,
            inputs,
            adversary: AdversarySpec { family, fair_tail: file.adversary.fair_tail },
            horizon: file.horizon,
            burn_in: file.burn_in.unwrap_or_else(|| default_burn_in(file.agents)),
            strategy,
            budget: file.budget.unwrap_or(DEFAULT_BUDGET),
        };
        scenario.validate()?;
        Ok(scenario)
    }
}

/// Report-friendly echo of a scenario, all fields rendered to plain data.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioEcho {
    pub agents: u32,
    pub values: u32,
    pub inputs: String,
    pub adversary_family: String,
    pub fair_tail: bool,
    pub horizon: u32,
    pub burn_in: u32,
    pub strategy: String,
}

impl From<&Scenario> for ScenarioEcho {
    fn from(s: &Scenario) -> Self {
        let inputs = match &s.inputs {
            InputsSpec::All => "all".to_string(),
            InputsSpec::Explicit(list) => format!("{} explicit assignments", list.len()),
        };
        let adversary_family = match &s.adversary.family {
            AdversaryFamily::MaxDropsPerRound(m) => format!("max-drops({m})"),
            AdversaryFamily::ExplicitPatterns(p) => format!("explicit({} patterns)", p.len()),
            AdversaryFamily::Unrestricted => "unrestricted".to_string(),
        };
        ScenarioEcho {
            agents: s.agents,
            values: s.values,
            inputs,
            adversary_family,
            fair_tail: s.adversary.fair_tail,
            horizon: s.horizon,
            burn_in: s.burn_in,
            strategy: s.strategy.to_string(),
        }
    }
}

/// Errors raised while enumerating a system.
#[derive(Debug, Clone, thiserror::Error)]
pub enum BuildError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("enumeration needs {required} points, budget is {budget}; shrink the scenario or raise the budget")]
    BudgetExceeded { required: u128, budget: u64 },
    #[error(transparent)]
    NoFixpoint(#[from] FixpointError),
}

/// All directed edges among `n` agents, in (sender, receiver) order.
fn directed_edges(n_agents: u32) -> Vec<(AgentId, AgentId)> {
    let mut edges = Vec::new();
    for s in 1..=n_agents {
        for r in 1..=n_agents {
            if s != r {
                edges.push((AgentId::new(s), AgentId::new(r)));
            }
        }
    }
    edges
}

/// The drop patterns the adversary may choose from each round, in a
/// deterministic order: by size, then lexicographic over the edge list.
pub fn allowed_patterns(spec: &AdversarySpec, n_agents: u32) -> Result<Vec<DropPattern>, ScenarioError> {
    match &spec.family {
        AdversaryFamily::ExplicitPatterns(patterns) => {
            for (i, p) in patterns.iter().enumerate() {
                p.validate(n_agents)
                    .map_err(|e| ScenarioError::field(format!("adversary.patterns[{i}]"), e.to_string()))?;
            }
            Ok(patterns.clone())
        }
        AdversaryFamily::MaxDropsPerRound(m) => {
            Ok(subsets_by_size(&directed_edges(n_agents), *m as usize))
        }
        AdversaryFamily::Unrestricted => {
            let edges = directed_edges(n_agents);
            let max = edges.len();
            Ok(subsets_by_size(&edges, max))
        }
    }
}

fn subsets_by_size(edges: &[(AgentId, AgentId)], max_size: usize) -> Vec<DropPattern> {
    let mut out = vec![DropPattern::empty()];
    let mut current: Vec<Vec<usize>> = vec![vec![]];
    for _size in 1..=max_size.min(edges.len()) {
        let mut next: Vec<Vec<usize>> = Vec::new();
        for subset in &current {
            let start = subset.last().map_or(0, |&i| i + 1);
            for i in start..edges.len() {
                let mut grown = subset.clone();
                grown.push(i);
                next.push(grown);
            }
        }
        for subset in &next {
            out.push(DropPattern::from_edges(subset.iter().map(|&i| edges[i])));
        }
        current = next;
    }
    out
}

/// Every length-`horizon` sequence of allowed patterns, lexicographic in
/// pattern indices with round 1 most significant.
fn enumerate_schedules(patterns: &[DropPattern], horizon: u32) -> Vec<Schedule> {
    let mut out = Vec::new();
    let mut indices = vec![0usize; horizon as usize];
    loop {
        out.push(Schedule::new(indices.iter().map(|&i| patterns[i].clone()).collect()));
        let mut pos = horizon as usize;
        loop {
            if pos == 0 {
                return out;
            }
            pos -= 1;
            indices[pos] += 1;
            if indices[pos] < patterns.len() {
                break;
            }
            indices[pos] = 0;
        }
    }
}

/// Builds the complete interpreted system for a scenario: every (input,
/// schedule) run extended by the canonical tail, the indistinguishability
/// index over all points, the knowledge sets, per-run fixpoints, and the
/// choice valuation.
pub fn enumerate_runs(scenario: &Scenario) -> Result<InterpretedSystem, BuildError> {
    scenario.validate()?;
    let n = scenario.agents;
    let patterns = allowed_patterns(&scenario.adversary, n)?;
    let inputs = scenario.input_assignments();

    let schedules_count = (patterns.len() as u128)
        .checked_pow(scenario.horizon)
        .unwrap_or(u128::MAX);
    let times = scenario.horizon as u128 + scenario.burn_in as u128 + 1;
    let required = (inputs.len() as u128)
        .saturating_mul(schedules_count)
        .saturating_mul(times);
    if required > scenario.budget as u128 {
        return Err(BuildError::BudgetExceeded { required, budget: scenario.budget });
    }

    let tail = scenario.adversary.tail_pattern(n);
    let schedules = enumerate_schedules(&patterns, scenario.horizon);
    let mut runs: Vec<Run> = Vec::with_capacity(inputs.len() * schedules.len());
    for input in &inputs {
        for schedule in &schedules {
            let states = simulate(input, schedule, &tail, scenario.burn_in);
            runs.push(Run {
                input: input.clone(),
                schedule: schedule.clone(),
                states,
                fixpoint_time: 0,
            });
        }
    }

    let partitions = build_partitions(&runs, n);
    let v_sets = compute_v_sets(&runs, &partitions, n);
    let v_star_sets = compute_v_star_sets(&runs, &partitions, &v_sets, n);
    let fixpoints = detect_fixpoints(&runs, &v_sets, &v_star_sets, &tail, scenario.burn_in, n)?;

    let times = runs[0].states().len();
    let choices = choices_from_v_star(&v_star_sets, &scenario.strategy, runs.len() * times);
    for (run_idx, run) in runs.iter_mut().enumerate() {
        run.fixpoint_time = fixpoints[run_idx];
        for (t, state) in run.states.iter_mut().enumerate() {
            state.set_choices(choices[run_idx * times + t].clone());
        }
    }

    Ok(InterpretedSystem::from_parts(scenario.clone(), runs, partitions, v_sets, v_star_sets))
}

/// Replay failure: the coordinates do not belong to the scenario's run set.
#[derive(Debug, Clone, thiserror::Error)]
pub enum ReplayError {
    #[error(transparent)]
    Build(#[from] BuildError),
    #[error("schedule has {got} rounds, scenario horizon is {expected}")]
    ScheduleLength { expected: u32, got: usize },
    #[error("round {round} pattern is not allowed by the adversary")]
    PatternNotAllowed { round: u32 },
    #[error("input assignment is not part of the scenario's input set")]
    InputNotCovered,
}

/// Rebuilds the enumerated run with the given coordinates, bit-identical to
/// the one `enumerate_runs` produced, including choices and fixpoint.
pub fn replay(scenario: &Scenario, input: &InputAssignment, schedule: &Schedule) -> Result<Run, ReplayError> {
    if schedule.len() != scenario.horizon as usize {
        return Err(ReplayError::ScheduleLength { expected: scenario.horizon, got: schedule.len() });
    }
    let patterns = allowed_patterns(&scenario.adversary, scenario.agents).map_err(BuildError::from)?;
    for (i, round) in schedule.rounds().iter().enumerate() {
        if !patterns.contains(round) {
            return Err(ReplayError::PatternNotAllowed { round: i as u32 + 1 });
        }
    }
    if !scenario.input_assignments().contains(input) {
        return Err(ReplayError::InputNotCovered);
    }
    let system = enumerate_runs(scenario)?;
    let idx = system
        .find_run(input, schedule)
        .expect("validated coordinates are enumerated");
    Ok(system.run(idx).clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::local_state_equal;

    fn agent(i: u32) -> AgentId {
        AgentId::new(i)
    }

    fn base_scenario() -> Scenario {
        Scenario {
            agents: 2,
            values: 2,
            inputs: InputsSpec::All,
            adversary: AdversarySpec { family: AdversaryFamily::MaxDropsPerRound(1), fair_tail: true },
            horizon: 3,
            burn_in: 6,
            strategy: Strategy::Min,
            budget: 1_000_000,
        }
    }

    #[test]
    fn max_drops_patterns_for_two_agents() {
        let spec = AdversarySpec { family: AdversaryFamily::MaxDropsPerRound(1), fair_tail: true };
        let patterns = allowed_patterns(&spec, 2).unwrap();
        assert_eq!(
            patterns,
            vec![
                DropPattern::empty(),
                DropPattern::from_edges([(agent(1), agent(2))]),
                DropPattern::from_edges([(agent(2), agent(1))]),
            ]
        );
    }

    #[test]
    fn unrestricted_patterns_for_two_agents() {
        let spec = AdversarySpec { family: AdversaryFamily::Unrestricted, fair_tail: true };
        let patterns = allowed_patterns(&spec, 2).unwrap();
        assert_eq!(patterns.len(), 4);
        assert!(patterns.contains(&DropPattern::all_edges(2)));
    }

    #[test]
    fn max_drops_patterns_for_three_agents() {
        let spec = AdversarySpec { family: AdversaryFamily::MaxDropsPerRound(1), fair_tail: true };
        assert_eq!(allowed_patterns(&spec, 3).unwrap().len(), 7);
    }

    #[test]
    fn explicit_patterns_validated() {
        let bad = AdversarySpec {
            family: AdversaryFamily::ExplicitPatterns(vec![DropPattern::from_edges([(agent(1), agent(5))])]),
            fair_tail: true,
        };
        assert!(allowed_patterns(&bad, 2).is_err());
    }

    #[test]
    fn two_generals_enumeration_count() {
        let sys = enumerate_runs(&base_scenario()).unwrap();
        assert_eq!(sys.run_count(), 108); // 4 inputs x 3^3 schedules
        let mut seen = std::collections::BTreeSet::new();
        for run in sys.runs() {
            assert!(seen.insert((run.input().clone(), run.schedule().clone())), "duplicate run");
        }
    }

    #[test]
    fn single_agent_enumeration() {
        let sys = enumerate_runs(&Scenario {
            agents: 1,
            values: 2,
            horizon: 2,
            burn_in: 2,
            ..base_scenario()
        })
        .unwrap();
        assert_eq!(sys.run_count(), 2); // no edges, one schedule per input
    }

    #[test]
    fn explicit_input_unrestricted_enumeration() {
        let input = InputAssignment::new(2, vec![Value::new(0), Value::new(1)]).unwrap();
        let sys = enumerate_runs(&Scenario {
            inputs: InputsSpec::Explicit(vec![input]),
            adversary: AdversarySpec { family: AdversaryFamily::Unrestricted, fair_tail: true },
            horizon: 1,
            burn_in: 6,
            ..base_scenario()
        })
        .unwrap();
        assert_eq!(sys.run_count(), 4);
    }

    #[test]
    fn budget_guard_reports_requirement() {
        let err = enumerate_runs(&Scenario { budget: 10, ..base_scenario() }).unwrap_err();
        match err {
            BuildError::BudgetExceeded { required, budget } => {
                assert_eq!(budget, 10);
                assert_eq!(required, 108 * 10);
            }
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn replay_reproduces_enumerated_run() {
        let scenario = base_scenario();
        let sys = enumerate_runs(&scenario).unwrap();
        let original = &sys.runs()[17];
        let replayed = replay(&scenario, original.input(), original.schedule()).unwrap();
        assert_eq!(replayed.fixpoint_time(), original.fixpoint_time());
        assert_eq!(replayed.states().len(), original.states().len());
        for (a, b) in replayed.states().iter().zip(original.states()) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn replay_with_mutated_pattern_diverges_at_first_changed_round() {
        let scenario = base_scenario();
        let sys = enumerate_runs(&scenario).unwrap();
        let original = &sys.runs()[5];
        let mut rounds = original.schedule().rounds().to_vec();
        let mutated_round = 1usize;
        rounds[mutated_round] = if rounds[mutated_round] == DropPattern::empty() {
            DropPattern::from_edges([(agent(1), agent(2))])
        } else {
            DropPattern::empty()
        };
        let mutated = replay(&scenario, original.input(), &Schedule::new(rounds)).unwrap();
        for t in 0..=mutated_round {
            assert_eq!(mutated.states()[t], original.states()[t]);
        }
        let t = mutated_round + 1;
        assert_ne!(mutated.states()[t], original.states()[t]);
    }

    #[test]
    fn replay_rejects_invalid_coordinates() {
        let scenario = base_scenario();
        let sys = enumerate_runs(&scenario).unwrap();
        let run = &sys.runs()[0];
        let both = DropPattern::all_edges(2); // not allowed with max-drops(1)
        let bad = Schedule::new(vec![both, DropPattern::empty(), DropPattern::empty()]);
        assert!(matches!(
            replay(&scenario, run.input(), &bad),
            Err(ReplayError::PatternNotAllowed { round: 1 })
        ));
        let short = Schedule::new(vec![DropPattern::empty()]);
        assert!(matches!(
            replay(&scenario, run.input(), &short),
            Err(ReplayError::ScheduleLength { expected: 3, got: 1 })
        ));
    }

    #[test]
    fn at_most_one_drop_always_lets_one_direction_through() {
        let sys = enumerate_runs(&base_scenario()).unwrap();
        for run in sys.runs() {
            for round in run.schedule().rounds() {
                assert!(round.len() <= 1);
            }
        }
        // so both agents end up knowing the full input assignment
        for run_idx in 0..sys.run_count() {
            for a in sys.agents() {
                let limit = crate::semantics::primitive_knowledge_limit(&sys, a, run_idx);
                assert_eq!(limit.len(), 2);
            }
        }
    }

    #[test]
    fn scenario_file_round_trip() {
        let text = r#"
            agents = 2
            values = 2
            inputs = "all"
            horizon = 3
            burn_in = 6
            strategy = "min"

            [adversary]
            family = "max-drops"
            m = 1
        "#;
        let scenario = Scenario::from_toml_str(text).unwrap();
        assert_eq!(scenario, base_scenario());
    }

    #[test]
    fn scenario_file_defaults_and_explicit_inputs() {
        let text = r#"
            agents = 2
            values = 2
            inputs = [[0, 1], [1, 0]]
            horizon = 1
            strategy = "max"

            [adversary]
            family = "unrestricted"
            fair_tail = false
        "#;
        let scenario = Scenario::from_toml_str(text).unwrap();
        assert_eq!(scenario.burn_in, default_burn_in(2));
        assert_eq!(scenario.budget, DEFAULT_BUDGET);
        assert!(!scenario.adversary.fair_tail);
        match &scenario.inputs {
            InputsSpec::Explicit(list) => assert_eq!(list.len(), 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn scenario_file_errors_carry_field_paths() {
        let missing_m = r#"
            agents = 2
            values = 2
            horizon = 1
            strategy = "min"
            [adversary]
            family = "max-drops"
        "#;
        let err = Scenario::from_toml_str(missing_m).unwrap_err();
        assert!(err.to_string().contains("adversary.m"), "{err}");

        let bad_strategy = r#"
            agents = 2
            values = 2
            horizon = 1
            strategy = "median"
            [adversary]
            family = "unrestricted"
        "#;
        let err = Scenario::from_toml_str(bad_strategy).unwrap_err();
        assert!(err.to_string().contains("strategy"), "{err}");

        let bad_input = r#"
            agents = 2
            values = 2
            inputs = [[0, 7]]
            horizon = 1
            strategy = "min"
            [adversary]
            family = "unrestricted"
        "#;
        let err = Scenario::from_toml_str(bad_input).unwrap_err();
        assert!(err.to_string().contains("inputs[0]"), "{err}");
    }

    #[test]
    fn insufficient_burn_in_names_the_run_and_suggests_more() {
        // one tail round is not enough: knowledge still jumps when the first
        // full delivery lands after two all-drop rounds
        let err = enumerate_runs(&Scenario {
            adversary: AdversarySpec { family: AdversaryFamily::Unrestricted, fair_tail: true },
            horizon: 2,
            burn_in: 1,
            ..base_scenario()
        })
        .unwrap_err();
        match err {
            BuildError::NoFixpoint(e) => {
                assert_eq!(e.burn_in, 1);
                assert!(e.to_string().contains("increase the burn-in"), "{e}");
            }
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn all_drop_tail_produces_stalled_knowledge() {
        let sys = enumerate_runs(&Scenario {
            adversary: AdversarySpec { family: AdversaryFamily::Unrestricted, fair_tail: false },
            horizon: 2,
            ..base_scenario()
        })
        .unwrap();
        // all-drop run: nothing beyond the agent's own input, ever
        let all_drop = sys
            .runs()
            .iter()
            .position(|r| r.schedule().rounds().iter().all(|p| p.len() == 2))
            .unwrap();
        for a in sys.agents() {
            let limit = crate::semantics::primitive_knowledge_limit(&sys, a, all_drop);
            assert_eq!(limit.len(), 1);
            assert_eq!(crate::semantics::mutually_known_limit(&sys, a, all_drop), None);
        }
    }

    #[test]
    fn enumerated_views_agree_with_simulation() {
        let scenario = base_scenario();
        let sys = enumerate_runs(&scenario).unwrap();
        let run = &sys.runs()[42];
        let states = simulate(
            run.input(),
            run.schedule(),
            &scenario.adversary.tail_pattern(2),
            scenario.burn_in,
        );
        for (t, state) in states.iter().enumerate() {
            for a in sys.agents() {
                assert!(local_state_equal(state.local(a), run.states()[t].local(a)));
            }
        }
    }
}

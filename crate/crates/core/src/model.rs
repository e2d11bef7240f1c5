//! Core domain objects: agents, values, atoms, local and global states, runs,
//! and the interpreted-system container over which all formula evaluation runs.
//!
//! The message model is synchronous full-information exchange: every round,
//! every agent sends its entire local state to every other agent, and the
//! adversary picks which directed messages are lost. Agents detect silence, so
//! a lost message is recorded as an explicit drop in the receiver's history.

use std::collections::BTreeMap;
use std::collections::BTreeSet;
use std::collections::hash_map::DefaultHasher;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::adversary::Scenario;
use crate::formula::PrimitiveValueFormula;
use crate::semantics::{Partition, Point};

/// Agent identifier, 1-based and dense within a scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AgentId(u32);

impl AgentId {
    pub fn new(index: u32) -> Self {
        debug_assert!(index >= 1, "agent indices are 1-based");
        AgentId(index)
    }

    pub fn index(self) -> u32 {
        self.0
    }

    /// Zero-based position, for dense per-agent storage.
    pub fn slot(self) -> usize {
        (self.0 - 1) as usize
    }
}

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Initial value, 0-based and totally ordered by index. The order is what the
/// min/max selection strategies use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Value(u32);

impl Value {
    pub fn new(index: u32) -> Self {
        Value(index)
    }

    pub fn index(self) -> u32 {
        self.0
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Propositional atom: either "agent a started with value v" or "agent a
/// currently chooses value v".
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Atom {
    Init(AgentId, Value),
    Choose(AgentId, Value),
}

impl Atom {
    pub fn agent(&self) -> AgentId {
        match *self {
            Atom::Init(a, _) | Atom::Choose(a, _) => a,
        }
    }

    pub fn value(&self) -> Value {
        match *self {
            Atom::Init(_, v) | Atom::Choose(_, v) => v,
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::Init(a, v) => write!(f, "init({a},{v})"),
            Atom::Choose(a, v) => write!(f, "choose({a},{v})"),
        }
    }
}

/// Total assignment of one initial value per agent.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct InputAssignment(Vec<Value>);

impl InputAssignment {
    /// Builds a total assignment for agents `1..=n`. Fails when the number of
    /// values does not match the agent count.
    pub fn new(n_agents: u32, values: Vec<Value>) -> Result<Self, ConfigError> {
        if values.len() != n_agents as usize {
            return Err(ConfigError::InputArity {
                expected: n_agents,
                got: values.len(),
            });
        }
        Ok(InputAssignment(values))
    }

    pub fn value(&self, agent: AgentId) -> Value {
        self.0[agent.slot()]
    }

    pub fn n_agents(&self) -> u32 {
        self.0.len() as u32
    }

    pub fn values(&self) -> &[Value] {
        &self.0
    }

    /// The assignment as a primitive value formula over all agents.
    pub fn as_pvf(&self) -> PrimitiveValueFormula {
        let map: BTreeMap<AgentId, Value> = self
            .0
            .iter()
            .enumerate()
            .map(|(i, v)| (AgentId::new(i as u32 + 1), *v))
            .collect();
        PrimitiveValueFormula::new(map).expect("input assignments are nonempty")
    }
}

/// Directed message edge (sender, receiver).
pub type Edge = (AgentId, AgentId);

/// The set of directed messages the adversary suppresses in one round.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DropPattern(BTreeSet<Edge>);

impl DropPattern {
    pub fn empty() -> Self {
        DropPattern(BTreeSet::new())
    }

    pub fn from_edges(edges: impl IntoIterator<Item = Edge>) -> Self {
        DropPattern(edges.into_iter().collect())
    }

    /// Every directed edge among `n` agents: the "nothing gets through" pattern.
    pub fn all_edges(n_agents: u32) -> Self {
        let mut set = BTreeSet::new();
        for s in 1..=n_agents {
            for r in 1..=n_agents {
                if s != r {
                    set.insert((AgentId::new(s), AgentId::new(r)));
                }
            }
        }
        DropPattern(set)
    }

    pub fn drops(&self, sender: AgentId, receiver: AgentId) -> bool {
        self.0.contains(&(sender, receiver))
    }

    pub fn edges(&self) -> impl Iterator<Item = &Edge> {
        self.0.iter()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Checks that every edge is a valid directed pair for `n` agents.
    pub fn validate(&self, n_agents: u32) -> Result<(), ConfigError> {
        for &(s, r) in &self.0 {
            let ok = s.index() >= 1 && s.index() <= n_agents && r.index() >= 1 && r.index() <= n_agents && s != r;
            if !ok {
                return Err(ConfigError::InvalidEdge {
                    from: s.index(),
                    to: r.index(),
                    n_agents,
                });
            }
        }
        Ok(())
    }
}

/// Per-round drop patterns for the adversarial prefix of a run.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Schedule(Vec<DropPattern>);

impl Schedule {
    pub fn new(rounds: Vec<DropPattern>) -> Self {
        Schedule(rounds)
    }

    pub fn rounds(&self) -> &[DropPattern] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Pattern applied in round `r` (1-based).
    pub fn round(&self, r: u32) -> &DropPattern {
        &self.0[(r - 1) as usize]
    }
}

/// Configuration errors raised while assembling model objects.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ConfigError {
    #[error("input assignment covers {got} agents, scenario has {expected}")]
    InputArity { expected: u32, got: usize },
    #[error("invalid drop edge ({from},{to}) for {n_agents} agents")]
    InvalidEdge { from: u32, to: u32, n_agents: u32 },
}

/// What a receiver recorded for one sender in one round.
#[derive(Debug, Clone)]
pub enum Delivery {
    /// The sender's full local state as it was before the round.
    Received(Arc<LocalState>),
    /// The adversary dropped the message; synchrony makes the loss observable.
    Dropped,
}

impl PartialEq for Delivery {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Delivery::Dropped, Delivery::Dropped) => true,
            (Delivery::Received(a), Delivery::Received(b)) => Arc::ptr_eq(a, b) || a == b,
            _ => false,
        }
    }
}

impl Eq for Delivery {}

/// One agent's complete view: its own input plus everything it has received,
/// round by round. Histories are append-only, which is what gives agents
/// perfect recall.
#[derive(Debug, Clone)]
pub struct LocalState {
    agent: AgentId,
    own_input: Value,
    round: u32,
    history: Vec<BTreeMap<AgentId, Delivery>>,
    fingerprint: u64,
}

impl LocalState {
    fn initial(agent: AgentId, own_input: Value) -> Self {
        Self::assemble(agent, own_input, 0, Vec::new())
    }

    fn assemble(agent: AgentId, own_input: Value, round: u32, history: Vec<BTreeMap<AgentId, Delivery>>) -> Self {
        let mut hasher = DefaultHasher::new();
        agent.index().hash(&mut hasher);
        own_input.index().hash(&mut hasher);
        round.hash(&mut hasher);
        for entry in &history {
            for (sender, delivery) in entry {
                sender.index().hash(&mut hasher);
                match delivery {
                    Delivery::Received(state) => {
                        1u8.hash(&mut hasher);
                        state.fingerprint.hash(&mut hasher);
                    }
                    Delivery::Dropped => 0u8.hash(&mut hasher),
                }
            }
        }
        let fingerprint = hasher.finish();
        LocalState { agent, own_input, round, history, fingerprint }
    }

    pub fn agent(&self) -> AgentId {
        self.agent
    }

    pub fn own_input(&self) -> Value {
        self.own_input
    }

    pub fn round(&self) -> u32 {
        self.round
    }

    /// One entry per elapsed round; each maps every other agent to what was
    /// received from it (or to the recorded drop).
    pub fn history(&self) -> &[BTreeMap<AgentId, Delivery>] {
        &self.history
    }

    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }
}

impl PartialEq for LocalState {
    fn eq(&self, other: &Self) -> bool {
        self.fingerprint == other.fingerprint
            && self.agent == other.agent
            && self.own_input == other.own_input
            && self.round == other.round
            && self.history == other.history
    }
}

impl Eq for LocalState {}

impl Hash for LocalState {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.fingerprint.hash(state);
    }
}

/// Local-view equality: the realization of the per-agent indistinguishability
/// relation on global states.
pub fn local_state_equal(a: &LocalState, b: &LocalState) -> bool {
    a == b
}

/// A snapshot of the whole system at one time.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GlobalState {
    time: u32,
    locals: Vec<Arc<LocalState>>,
    choices: Vec<Option<Value>>,
}

impl GlobalState {
    pub fn time(&self) -> u32 {
        self.time
    }

    pub fn local(&self, agent: AgentId) -> &Arc<LocalState> {
        &self.locals[agent.slot()]
    }

    pub fn locals(&self) -> &[Arc<LocalState>] {
        &self.locals
    }

    /// The choice-rule output for each agent at this state. Derived data,
    /// filled in after enumeration; `None` means the agent chooses nothing.
    pub fn choices(&self) -> &[Option<Value>] {
        &self.choices
    }

    pub fn choice(&self, agent: AgentId) -> Option<Value> {
        self.choices[agent.slot()]
    }

    pub(crate) fn set_choices(&mut self, choices: Vec<Option<Value>>) {
        debug_assert_eq!(choices.len(), self.locals.len());
        self.choices = choices;
    }
}

/// Time-0 state: every agent holds its input, histories are empty, nothing is
/// chosen yet.
pub fn initial_state(input: &InputAssignment) -> GlobalState {
    let n = input.n_agents();
    let locals = (1..=n)
        .map(|i| {
            let a = AgentId::new(i);
            Arc::new(LocalState::initial(a, input.value(a)))
        })
        .collect();
    GlobalState { time: 0, locals, choices: vec![None; n as usize] }
}

/// One synchronous round: every agent sends its pre-round state to every other
/// agent, and `drop_pattern` decides which directed messages are lost.
pub fn step(state: &GlobalState, drop_pattern: &DropPattern) -> GlobalState {
    let n = state.locals.len() as u32;
    let locals = (1..=n)
        .map(|i| {
            let receiver = AgentId::new(i);
            let prev = state.local(receiver);
            let mut entry = BTreeMap::new();
            for s in 1..=n {
                let sender = AgentId::new(s);
                if sender == receiver {
                    continue;
                }
                let delivery = if drop_pattern.drops(sender, receiver) {
                    Delivery::Dropped
                } else {
                    Delivery::Received(Arc::clone(state.local(sender)))
                };
                entry.insert(sender, delivery);
            }
            let mut history = prev.history.clone();
            history.push(entry);
            Arc::new(LocalState::assemble(receiver, prev.own_input, prev.round + 1, history))
        })
        .collect();
    GlobalState { time: state.time + 1, locals, choices: vec![None; n as usize] }
}

/// Builds the full state sequence of a run: `schedule.len()` adversarial
/// rounds followed by `burn_in` rounds of the canonical tail pattern.
pub fn simulate(input: &InputAssignment, schedule: &Schedule, tail: &DropPattern, burn_in: u32) -> Vec<GlobalState> {
    let total = schedule.len() as u32 + burn_in;
    let mut states = Vec::with_capacity(total as usize + 1);
    states.push(initial_state(input));
    for r in 1..=total {
        let pattern = if r <= schedule.len() as u32 { schedule.round(r) } else { tail };
        let next = step(states.last().expect("nonempty"), pattern);
        states.push(next);
    }
    states
}

/// A finite representation of one infinite run: the adversarial prefix, the
/// deterministic tail, and the time from which the epistemic state of every
/// agent is constant.
#[derive(Debug, Clone)]
pub struct Run {
    pub(crate) input: InputAssignment,
    pub(crate) schedule: Schedule,
    pub(crate) states: Vec<GlobalState>,
    pub(crate) fixpoint_time: u32,
}

impl Run {
    pub fn input(&self) -> &InputAssignment {
        &self.input
    }

    pub fn schedule(&self) -> &Schedule {
        &self.schedule
    }

    pub fn states(&self) -> &[GlobalState] {
        &self.states
    }

    pub fn state(&self, time: u32) -> &GlobalState {
        &self.states[time as usize]
    }

    /// Last represented time; the state here stands in for the infinite tail.
    pub fn last_time(&self) -> u32 {
        (self.states.len() - 1) as u32
    }

    /// Earliest represented time from which the per-agent knowledge sets and
    /// choices are constant for the rest of the run.
    pub fn fixpoint_time(&self) -> u32 {
        self.fixpoint_time
    }
}

/// The complete enumerated run set with its valuation and per-agent
/// indistinguishability index. Immutable once built; evaluation only reads.
#[derive(Debug)]
pub struct InterpretedSystem {
    scenario: Scenario,
    runs: Vec<Run>,
    partitions: Vec<Partition>,
    v_sets: Vec<Vec<PrimitiveValueFormula>>,
    v_star_sets: Vec<Vec<Option<PrimitiveValueFormula>>>,
}

impl InterpretedSystem {
    pub(crate) fn from_parts(
        scenario: Scenario,
        runs: Vec<Run>,
        partitions: Vec<Partition>,
        v_sets: Vec<Vec<PrimitiveValueFormula>>,
        v_star_sets: Vec<Vec<Option<PrimitiveValueFormula>>>,
    ) -> Self {
        InterpretedSystem { scenario, runs, partitions, v_sets, v_star_sets }
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn n_agents(&self) -> u32 {
        self.scenario.agents
    }

    pub fn n_values(&self) -> u32 {
        self.scenario.values
    }

    pub fn agents(&self) -> impl Iterator<Item = AgentId> {
        (1..=self.n_agents()).map(AgentId::new)
    }

    pub fn values(&self) -> impl Iterator<Item = Value> {
        (0..self.n_values()).map(Value::new)
    }

    pub fn runs(&self) -> &[Run] {
        &self.runs
    }

    pub fn run(&self, index: usize) -> &Run {
        &self.runs[index]
    }

    pub fn run_count(&self) -> usize {
        self.runs.len()
    }

    /// Last represented time, shared by every run.
    pub fn last_time(&self) -> u32 {
        self.runs[0].last_time()
    }

    pub fn times(&self) -> impl Iterator<Item = u32> {
        0..=self.last_time()
    }

    pub fn point_count(&self) -> usize {
        self.runs.len() * (self.last_time() as usize + 1)
    }

    pub fn points(&self) -> impl Iterator<Item = Point> + '_ {
        let times = self.last_time();
        (0..self.runs.len()).flat_map(move |run| (0..=times).map(move |time| Point { run, time }))
    }

    pub fn point_index(&self, p: Point) -> usize {
        p.run * (self.last_time() as usize + 1) + p.time as usize
    }

    pub fn input(&self, run: usize) -> &InputAssignment {
        self.runs[run].input()
    }

    pub fn local_state(&self, p: Point, agent: AgentId) -> &Arc<LocalState> {
        self.runs[p.run].state(p.time).local(agent)
    }

    /// The valuation: does `atom` hold at point `p`?
    pub fn atom_holds(&self, p: Point, atom: &Atom) -> bool {
        match *atom {
            Atom::Init(a, v) => self.runs[p.run].input().value(a) == v,
            Atom::Choose(a, v) => self.runs[p.run].state(p.time).choice(a) == Some(v),
        }
    }

    /// All points agent `a` cannot distinguish from `p`, including `p` itself.
    pub fn indistinguishability_class(&self, agent: AgentId, p: Point) -> &[Point] {
        let idx = self.point_index(p);
        let part = &self.partitions[agent.slot()];
        &part.members[part.class_of[idx] as usize]
    }

    pub(crate) fn partition(&self, agent: AgentId) -> &Partition {
        &self.partitions[agent.slot()]
    }

    /// Every initial-value atom agent `a` knows at `p`, as a canonical
    /// primitive value formula. Nonempty: an agent always knows its own input.
    pub fn v_set(&self, agent: AgentId, p: Point) -> &PrimitiveValueFormula {
        &self.v_sets[agent.slot()][self.point_index(p)]
    }

    /// Every initial-value atom agent `a` knows to be mutual knowledge at `p`,
    /// or `None` when there is no such atom.
    pub fn v_star_set(&self, agent: AgentId, p: Point) -> Option<&PrimitiveValueFormula> {
        self.v_star_sets[agent.slot()][self.point_index(p)].as_ref()
    }

    pub fn choice(&self, agent: AgentId, p: Point) -> Option<Value> {
        self.runs[p.run].state(p.time).choice(agent)
    }

    pub fn fixpoint_time(&self, run: usize) -> u32 {
        self.runs[run].fixpoint_time()
    }

    /// Locates an enumerated run by its (input, schedule) coordinates.
    pub fn find_run(&self, input: &InputAssignment, schedule: &Schedule) -> Option<usize> {
        self.runs
            .iter()
            .position(|r| r.input() == input && r.schedule() == schedule)
    }
}

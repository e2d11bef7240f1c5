//! Exact simulator and temporal-epistemic model checker for stabilizing
//! agreement under message adversaries.
//!
//! The crate enumerates every run of a round-based full-information protocol
//! under a configurable message adversary, builds the interpreted system with
//! its per-agent indistinguishability relations, evaluates knowledge/temporal
//! formulas over it, applies the largest mutually-known choice rule, and
//! machine-checks the stable-choice and agreement conditions together with
//! the sufficient-condition implication between them.
//!
//! Entry points:
//! - [`adversary::Scenario`] describes a problem; [`adversary::enumerate_runs`]
//!   builds the complete [`model::InterpretedSystem`].
//! - [`formula::parse`] and [`semantics::eval`] probe individual formulas.
//! - [`checker::verify_theorem`] produces a [`checker::CheckReport`] with one
//!   verdict per condition and replayable witnesses for failures.
//!
//! ```
//! use stabcheck::{enumerate_runs, parse, verify_theorem, BroadcasterMode, Scenario};
//!
//! let scenario = Scenario::from_toml_str(r#"
//!     agents = 2
//!     values = 2
//!     horizon = 3
//!     burn_in = 6
//!     strategy = "min"
//!     [adversary]
//!     family = "max-drops"
//!     m = 1
//! "#).unwrap();
//!
//! let system = enumerate_runs(&scenario).unwrap();
//! assert_eq!(system.run_count(), 108);
//!
//! // every run eventually settles on a common value
//! let report = verify_theorem(&system, BroadcasterMode::Lenient).unwrap();
//! assert!(report.all_pass());
//!
//! // and formulas can be probed directly
//! let f = parse("K 1 init(1,0) | K 1 init(1,1)", system.n_agents()).unwrap();
//! assert!(stabcheck::eval_system(&system, &f).unwrap().holds);
//! ```

pub mod adversary;
pub mod checker;
pub mod formula;
pub mod model;
pub mod protocol;
pub mod semantics;

pub use adversary::{
    allowed_patterns, enumerate_runs, replay, AdversaryFamily, AdversarySpec, BuildError, InputsSpec,
    ReplayError, Scenario, ScenarioError,
};
pub use checker::{
    agreement_value, broadcaster_witnesses, check_condition, probe_proof_structure, verify_theorem,
    BroadcasterMode, CheckReport, ConditionId, ConditionVerdict, TheoremRefutation, Witness,
};
pub use formula::{enumerate_phi, parse, print, Formula, ParseError, PrimitiveValueFormula};
pub use model::{
    initial_state, local_state_equal, simulate, step, AgentId, Atom, DropPattern, GlobalState,
    InputAssignment, InterpretedSystem, LocalState, Run, Schedule, Value,
};
pub use protocol::{assign_choices, select_value, ChoiceAssignment, Strategy};
pub use semantics::{
    current_primitive_knowledge, eval, eval_points, eval_run, eval_system, explain,
    mutually_known_limit, mutually_known_primitive, primitive_knowledge_limit, snapshot,
    EpistemicSnapshot, EvalError, Point, SystemVerdict, TraceLine,
};

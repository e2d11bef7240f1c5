//! Value selection strategies and the largest mutually-known choice rule that
//! fixes the `choose` valuation.
//!
//! An agent chooses at a point exactly when it knows some primitive value
//! formula to be mutual knowledge; the chosen value is then the strategy
//! applied to the strongest such formula. The rule only reads `init`-atom
//! knowledge, so choices are computed in one pass after enumeration and
//! formulas mentioning `choose` are evaluated afterwards.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::formula::PrimitiveValueFormula;
use crate::model::{InterpretedSystem, Value};
use crate::semantics::Point;

/// Deterministic, scenario-wide rule mapping a primitive value formula to one
/// of the initial values it mentions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Strategy {
    /// Smallest mentioned value.
    Min,
    /// Largest mentioned value.
    Max,
    /// First value of the preference list that the formula mentions. The list
    /// must order every value of the scenario.
    Custom(Vec<Value>),
}

impl Strategy {
    /// Checks a custom preference list against the scenario's value count:
    /// it must be a permutation of all values.
    pub fn validate(&self, k_values: u32) -> Result<(), StrategyError> {
        if let Strategy::Custom(prefs) = self {
            let mut seen = vec![false; k_values as usize];
            for v in prefs {
                let idx = v.index();
                if idx >= k_values {
                    return Err(StrategyError::ValueOutOfRange { value: idx, k: k_values });
                }
                if std::mem::replace(&mut seen[idx as usize], true) {
                    return Err(StrategyError::DuplicatePreference { value: idx });
                }
            }
            if seen.iter().any(|s| !s) {
                return Err(StrategyError::IncompletePreference { k: k_values });
            }
        }
        Ok(())
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Strategy::Min => write!(f, "min"),
            Strategy::Max => write!(f, "max"),
            Strategy::Custom(prefs) => {
                write!(f, "custom:")?;
                for (i, v) in prefs.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{v}")?;
                }
                Ok(())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum StrategyError {
    #[error("unknown strategy '{0}', expected min, max, or custom:<value,...>")]
    Unknown(String),
    #[error("custom strategy value {value} out of range for {k} values")]
    ValueOutOfRange { value: u32, k: u32 },
    #[error("custom strategy lists value {value} twice")]
    DuplicatePreference { value: u32 },
    #[error("custom strategy must order all {k} values")]
    IncompletePreference { k: u32 },
}

impl FromStr for Strategy {
    type Err = StrategyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "min" => Ok(Strategy::Min),
            "max" => Ok(Strategy::Max),
            _ => {
                if let Some(list) = s.strip_prefix("custom:") {
                    let mut prefs = Vec::new();
                    for part in list.split(',') {
                        let v: u32 = part
                            .trim()
                            .parse()
                            .map_err(|_| StrategyError::Unknown(s.to_string()))?;
                        prefs.push(Value::new(v));
                    }
                    Ok(Strategy::Custom(prefs))
                } else {
                    Err(StrategyError::Unknown(s.to_string()))
                }
            }
        }
    }
}

impl Serialize for Strategy {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Strategy {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Applies the strategy to a primitive value formula. The result is always
/// one of the values the formula mentions.
pub fn select_value(strategy: &Strategy, phi: &PrimitiveValueFormula) -> Value {
    match strategy {
        Strategy::Min => phi.values().min().expect("nonempty"),
        Strategy::Max => phi.values().max().expect("nonempty"),
        Strategy::Custom(prefs) => {
            let mentioned: Vec<Value> = phi.values().collect();
            prefs
                .iter()
                .copied()
                .find(|v| mentioned.contains(v))
                .expect("complete preference list covers all values")
        }
    }
}

/// The choice-rule output for every agent at every point. `None` means the
/// agent chooses nothing there.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChoiceAssignment {
    /// Indexed per point (run-major), then per agent slot.
    choices: Vec<Vec<Option<Value>>>,
    times: usize,
}

impl ChoiceAssignment {
    pub fn choice(&self, point: Point, agent_slot: usize) -> Option<Value> {
        self.choices[point.run * self.times + point.time as usize][agent_slot]
    }
}

/// Recomputes the choice rule from the system's mutually-known knowledge
/// sets. Equals the assignment baked into the system's states at build time.
pub fn assign_choices(system: &InterpretedSystem) -> ChoiceAssignment {
    let strategy = &system.scenario().strategy;
    let times = system.last_time() as usize + 1;
    let choices = system
        .points()
        .map(|p| {
            system
                .agents()
                .map(|a| system.v_star_set(a, p).map(|phi| select_value(strategy, phi)))
                .collect()
        })
        .collect();
    ChoiceAssignment { choices, times }
}

/// Choice computation used during system construction, before the
/// `InterpretedSystem` exists: same rule, raw inputs.
pub(crate) fn choices_from_v_star(
    v_star_sets: &[Vec<Option<PrimitiveValueFormula>>],
    strategy: &Strategy,
    point_count: usize,
) -> Vec<Vec<Option<Value>>> {
    (0..point_count)
        .map(|idx| {
            v_star_sets
                .iter()
                .map(|per_agent| per_agent[idx].as_ref().map(|phi| select_value(strategy, phi)))
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adversary::{enumerate_runs, AdversaryFamily, AdversarySpec, InputsSpec, Scenario};
    use crate::formula::enumerate_phi;
    use crate::model::{AgentId, InputAssignment};

    fn pvf(pairs: &[(u32, u32)]) -> PrimitiveValueFormula {
        PrimitiveValueFormula::from_pairs(pairs.iter().copied()).unwrap()
    }

    #[test]
    fn min_max_and_singleton() {
        assert_eq!(select_value(&Strategy::Min, &pvf(&[(1, 0), (2, 1)])), Value::new(0));
        assert_eq!(select_value(&Strategy::Max, &pvf(&[(1, 0), (2, 1)])), Value::new(1));
        assert_eq!(select_value(&Strategy::Min, &pvf(&[(2, 1)])), Value::new(1));
    }

    #[test]
    fn custom_prefers_listed_order() {
        let strat = Strategy::Custom(vec![Value::new(1), Value::new(0)]);
        assert_eq!(select_value(&strat, &pvf(&[(1, 0), (2, 1)])), Value::new(1));
        assert_eq!(select_value(&strat, &pvf(&[(1, 0)])), Value::new(0));
    }

    #[test]
    fn strategy_parsing() {
        assert_eq!("min".parse::<Strategy>().unwrap(), Strategy::Min);
        assert_eq!("max".parse::<Strategy>().unwrap(), Strategy::Max);
        assert_eq!(
            "custom:1,0".parse::<Strategy>().unwrap(),
            Strategy::Custom(vec![Value::new(1), Value::new(0)])
        );
        assert!("median".parse::<Strategy>().is_err());
    }

    #[test]
    fn custom_validation() {
        assert!(Strategy::Custom(vec![Value::new(1), Value::new(0)]).validate(2).is_ok());
        assert!(matches!(
            Strategy::Custom(vec![Value::new(0)]).validate(2),
            Err(StrategyError::IncompletePreference { k: 2 })
        ));
        assert!(matches!(
            Strategy::Custom(vec![Value::new(0), Value::new(0)]).validate(2),
            Err(StrategyError::DuplicatePreference { value: 0 })
        ));
        assert!(matches!(
            Strategy::Custom(vec![Value::new(2), Value::new(0)]).validate(2),
            Err(StrategyError::ValueOutOfRange { value: 2, k: 2 })
        ));
    }

    #[test]
    fn selection_stays_within_formula_values() {
        for phi in enumerate_phi(3, 3) {
            for strat in [
                Strategy::Min,
                Strategy::Max,
                Strategy::Custom(vec![Value::new(2), Value::new(0), Value::new(1)]),
            ] {
                let v = select_value(&strat, &phi);
                assert!(phi.values().any(|w| w == v), "{strat} picked {v} outside {phi}");
            }
        }
    }

    fn two_generals(strategy: Strategy) -> crate::model::InterpretedSystem {
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

    #[test]
    fn nobody_chooses_at_time_zero() {
        let sys = two_generals(Strategy::Min);
        for run in 0..sys.run_count() {
            let p = Point { run, time: 0 };
            for a in sys.agents() {
                assert_eq!(sys.choice(a, p), None);
            }
        }
    }

    #[test]
    fn round_trip_run_chooses_min_at_time_two() {
        let sys = two_generals(Strategy::Min);
        let input = InputAssignment::new(2, vec![Value::new(0), Value::new(1)]).unwrap();
        let run = sys
            .runs()
            .iter()
            .position(|r| {
                r.input() == &input
                    && r.schedule().round(1).drops(AgentId::new(1), AgentId::new(2))
                    && r.schedule().round(2).drops(AgentId::new(2), AgentId::new(1))
                    && r.schedule().round(3).is_empty()
            })
            .unwrap();
        assert_eq!(sys.choice(AgentId::new(2), Point { run, time: 2 }), Some(Value::new(0)));
    }

    #[test]
    fn single_agent_chooses_own_input_immediately() {
        let sys = enumerate_runs(&Scenario {
            agents: 1,
            values: 2,
            inputs: InputsSpec::All,
            adversary: AdversarySpec { family: AdversaryFamily::Unrestricted, fair_tail: true },
            horizon: 1,
            burn_in: 2,
            strategy: Strategy::Min,
            budget: 1_000_000,
        })
        .unwrap();
        for run in 0..sys.run_count() {
            let own = sys.input(run).value(AgentId::new(1));
            assert_eq!(sys.choice(AgentId::new(1), Point { run, time: 0 }), Some(own));
        }
    }

    #[test]
    fn recomputed_assignment_matches_baked_choices() {
        let sys = two_generals(Strategy::Max);
        let assignment = assign_choices(&sys);
        for p in sys.points() {
            for a in sys.agents() {
                assert_eq!(assignment.choice(p, a.slot()), sys.choice(a, p));
            }
        }
    }

    #[test]
    fn choices_stable_past_fixpoint() {
        let sys = two_generals(Strategy::Min);
        for run in 0..sys.run_count() {
            let fix = sys.fixpoint_time(run);
            for a in sys.agents() {
                let settled = sys.choice(a, Point { run, time: fix });
                for t in fix..=sys.last_time() {
                    assert_eq!(sys.choice(a, Point { run, time: t }), settled);
                }
            }
        }
    }
}

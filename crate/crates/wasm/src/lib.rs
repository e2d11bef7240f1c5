//! Browser bindings for the model checker: string-in/string-out wrappers
//! around scenario checking, run timelines, and formula evaluation, so a
//! static page can drive everything without extra glue.
//!
//! Every function takes the scenario file text (TOML) and returns JSON; an
//! `{"error": "..."}` object signals failure.

use serde::Serialize;
use serde_json::json;
use wasm_bindgen::prelude::wasm_bindgen;

use stabcheck::adversary::{enumerate_runs, Scenario};
use stabcheck::checker::{agreement_value, verify_theorem, BroadcasterMode};
use stabcheck::formula::parse;
use stabcheck::model::InterpretedSystem;
use stabcheck::semantics::{eval, eval_run, eval_system, explain, snapshot, Point};

fn err_json(message: impl std::fmt::Display) -> String {
    json!({ "error": message.to_string() }).to_string()
}

fn ok_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string(value).unwrap_or_else(err_json)
}

fn build(scenario_toml: &str) -> Result<InterpretedSystem, String> {
    let scenario = Scenario::from_toml_str(scenario_toml).map_err(|e| e.to_string())?;
    enumerate_runs(&scenario).map_err(|e| e.to_string())
}

/// Builds the system and runs the full condition check. Returns the report
/// plus per-run agreement values for the summary view.
#[wasm_bindgen]
pub fn check_scenario(scenario_toml: &str, mode: &str) -> String {
    let mode: BroadcasterMode = match mode.parse() {
        Ok(m) => m,
        Err(e) => return err_json(e),
    };
    let system = match build(scenario_toml) {
        Ok(s) => s,
        Err(e) => return err_json(e),
    };
    match verify_theorem(&system, mode) {
        Ok(report) => {
            let agreed: Vec<Option<u32>> = (0..system.run_count())
                .map(|r| agreement_value(&system, r).map(|v| v.index()))
                .collect();
            let report_value = serde_json::to_value(&report).expect("report serializes");
            ok_json(&json!({ "report": report_value, "agreement_values": agreed }))
        }
        Err(refutation) => err_json(refutation),
    }
}

/// Lists every enumerated run: id, input, schedule, fixpoint, agreed value.
#[wasm_bindgen]
pub fn list_runs(scenario_toml: &str) -> String {
    let system = match build(scenario_toml) {
        Ok(s) => s,
        Err(e) => return err_json(e),
    };
    let runs: Vec<_> = (0..system.run_count())
        .map(|idx| {
            let run = &system.runs()[idx];
            json!({
                "id": idx,
                "input": run.input().values().iter().map(|v| v.index()).collect::<Vec<_>>(),
                "schedule": schedule_json(run.schedule()),
                "fixpoint_time": run.fixpoint_time(),
                "agreement_value": agreement_value(&system, idx).map(|v| v.index()),
            })
        })
        .collect();
    ok_json(&json!({
        "agents": system.n_agents(),
        "values": system.n_values(),
        "horizon": system.scenario().horizon,
        "last_time": system.last_time(),
        "run_count": system.run_count(),
        "runs": runs,
    }))
}

fn schedule_json(schedule: &stabcheck::model::Schedule) -> serde_json::Value {
    json!(schedule
        .rounds()
        .iter()
        .map(|p| p.edges().map(|&(s, r)| (s.index(), r.index())).collect::<Vec<_>>())
        .collect::<Vec<_>>())
}

/// Round-by-round view of one run: per agent and time, the known and
/// mutually-known input sets and the current choice.
#[wasm_bindgen]
pub fn run_timeline(scenario_toml: &str, run_id: usize) -> String {
    let system = match build(scenario_toml) {
        Ok(s) => s,
        Err(e) => return err_json(e),
    };
    if run_id >= system.run_count() {
        return err_json(format!("run {run_id} out of range, system has {} runs", system.run_count()));
    }
    let run = &system.runs()[run_id];
    let horizon = run.schedule().len() as u32;
    let times: Vec<_> = system
        .times()
        .map(|t| {
            let drops: Vec<(u32, u32)> = if t >= 1 && t <= horizon {
                run.schedule().round(t).edges().map(|&(s, r)| (s.index(), r.index())).collect()
            } else if t >= 1 && !system.scenario().adversary.fair_tail {
                stabcheck::model::DropPattern::all_edges(system.n_agents())
                    .edges()
                    .map(|&(s, r)| (s.index(), r.index()))
                    .collect()
            } else {
                Vec::new()
            };
            let pairs = |phi: &stabcheck::formula::PrimitiveValueFormula| {
                phi.assignment()
                    .iter()
                    .map(|(b, v)| (b.index(), v.index()))
                    .collect::<Vec<_>>()
            };
            let agents: Vec<_> = snapshot(&system, run_id, t)
                .agents
                .iter()
                .map(|agent| {
                    json!({
                        "agent": agent.agent.index(),
                        "known": pairs(&agent.known),
                        "mutual": agent.mutually_known.as_ref().map(&pairs),
                        "choice": agent.choice.map(|v| v.index()),
                    })
                })
                .collect();
            json!({ "t": t, "tail": t > horizon, "drops": drops, "agents": agents })
        })
        .collect();
    ok_json(&json!({
        "run": run_id,
        "input": run.input().values().iter().map(|v| v.index()).collect::<Vec<_>>(),
        "schedule": schedule_json(run.schedule()),
        "fixpoint_time": run.fixpoint_time(),
        "last_time": system.last_time(),
        "agents": system.n_agents(),
        "agreement_value": agreement_value(&system, run_id).map(|v| v.index()),
        "times": times,
    }))
}

/// Evaluates a formula. `run_id < 0` quantifies over the whole system,
/// `t < 0` over all times of the run. Returns the verdict and, for point
/// evaluation, the subformula trace.
#[wasm_bindgen]
pub fn eval_formula(scenario_toml: &str, formula_text: &str, run_id: i32, t: i32) -> String {
    let system = match build(scenario_toml) {
        Ok(s) => s,
        Err(e) => return err_json(e),
    };
    let formula = match parse(formula_text, system.n_agents()) {
        Ok(f) => f,
        Err(e) => return err_json(e),
    };
    if run_id >= 0 && run_id as usize >= system.run_count() {
        return err_json(format!("run {run_id} out of range, system has {} runs", system.run_count()));
    }
    let result = if run_id < 0 {
        eval_system(&system, &formula).map(|v| {
            json!({
                "verdict": v.holds,
                "scope": "system",
                "witness": v.witness.map(|w| json!({ "run": w.run, "t": w.time })),
            })
        })
    } else if t < 0 {
        eval_run(&system, run_id as usize, &formula)
            .map(|holds| json!({ "verdict": holds, "scope": "run" }))
    } else {
        let point = Point { run: run_id as usize, time: t as u32 };
        eval(&system, point, &formula).and_then(|holds| {
            let trace = explain(&system, point, &formula)?;
            Ok(json!({
                "verdict": holds,
                "scope": "point",
                "trace": trace,
            }))
        })
    };
    match result {
        Ok(value) => ok_json(&value),
        Err(e) => err_json(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO_GENERALS: &str = r#"
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

    #[test]
    fn check_returns_report_json() {
        let out = check_scenario(TWO_GENERALS, "lenient");
        let doc: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert!(doc.get("error").is_none(), "{out}");
        assert_eq!(doc["report"]["run_count"], 108);
        assert_eq!(doc["report"]["theorem"]["conclusions_pass"], true);
        assert_eq!(doc["agreement_values"].as_array().unwrap().len(), 108);
    }

    #[test]
    fn timeline_has_one_entry_per_time() {
        let out = run_timeline(TWO_GENERALS, 0);
        let doc: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert!(doc.get("error").is_none(), "{out}");
        assert_eq!(doc["times"].as_array().unwrap().len(), 10);
        assert_eq!(doc["agents"], 2);
    }

    #[test]
    fn eval_formula_scopes() {
        let sys_level = eval_formula(TWO_GENERALS, "init(1,0) -> init(1,0)", -1, -1);
        let doc: serde_json::Value = serde_json::from_str(&sys_level).unwrap();
        assert_eq!(doc["verdict"], true);
        let point_level = eval_formula(TWO_GENERALS, "K 1 init(1,0)", 0, 0);
        let doc: serde_json::Value = serde_json::from_str(&point_level).unwrap();
        assert!(doc["trace"].as_array().unwrap().len() >= 2);
    }

    #[test]
    fn errors_are_json() {
        let out = check_scenario("agents = 0", "lenient");
        let doc: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert!(doc["error"].as_str().is_some());
        let out = eval_formula(TWO_GENERALS, "K 1 init(2,", -1, -1);
        let doc: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert!(doc["error"].as_str().unwrap().contains("syntax error"));
    }
}

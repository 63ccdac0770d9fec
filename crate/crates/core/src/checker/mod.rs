//! Explicit-state verification of properties over the joint system.
//!
//! The negated property is translated to a Büchi automaton and nested DFS
//! looks for an accepting lasso in the product. States deeper than the step
//! bound are cut off; a search that cut anything off and found no lasso is
//! reported as bounded instead of holding.

mod ndfs;
pub mod system;

use std::fmt::Write as _;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::agent::AgentConfig;
use crate::buchi::{degeneralize, translate_over, BuchiAutomaton};
use crate::grid::Scenario;
use crate::psl::{parse_property, to_nnf, Formula, PslError};
use ndfs::{Search, StateSpace};
use system::{successors, BranchChoice, JointState};

pub const DEFAULT_STEP_BOUND: usize = 10_000;

#[derive(Debug, Clone)]
pub struct VerifyOptions {
    pub step_bound: usize,
    pub config: AgentConfig,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            step_bound: DEFAULT_STEP_BOUND,
            config: AgentConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Holds,
    Violated,
    Bounded,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stats {
    /// Distinct joint states in the explored product.
    pub states: usize,
    pub max_depth: usize,
    pub automaton_states: usize,
    pub product_states: usize,
    #[serde(with = "millis")]
    pub runtime: Duration,
}

mod millis {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};
    use std::time::Duration;

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        (d.as_millis() as u64).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        u64::deserialize(d).map(Duration::from_millis)
    }
}

impl Stats {
    /// The deterministic part of the statistics; wall-clock time is left out.
    pub fn block(&self) -> String {
        format!(
            "total states: {}\nmaximum search depth: {}\nbuchi automaton states: {}\nproduct states: {}\n",
            self.states, self.max_depth, self.automaton_states, self.product_states
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub state: JointState,
    /// Choices on the transition into this state; empty for the first one.
    pub via: Vec<BranchChoice>,
    pub valuation: Vec<bool>,
}

/// A lasso of joint states violating the property, self-contained enough to
/// be replayed against the scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Counterexample {
    pub formula: String,
    pub atoms: Vec<String>,
    pub config: AgentConfig,
    pub prefix: Vec<TraceStep>,
    pub cycle: Vec<TraceStep>,
    /// Choices on the edge from the last loop state back to the first.
    pub closing: Vec<BranchChoice>,
}

impl Counterexample {
    pub fn steps(&self) -> impl Iterator<Item = &TraceStep> {
        self.prefix.iter().chain(self.cycle.iter())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub status: Status,
    pub formula: String,
    pub counterexample: Option<Counterexample>,
    pub stats: Stats,
}

impl Verdict {
    pub fn holds(&self) -> bool {
        self.status == Status::Holds
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CheckError {
    #[error(transparent)]
    Property(#[from] PslError),
}

/// Automaton for the negation of `f`, over the atoms of `f`.
pub fn negated_automaton(f: &Formula) -> BuchiAutomaton {
    let atoms = f.atoms();
    degeneralize(&translate_over(&to_nnf(&Formula::not(f.clone())), &atoms))
}

fn check_atoms(f: &Formula, config: &AgentConfig) -> Result<(), PslError> {
    let atoms = f.atoms();
    if atoms.len() > 64 {
        return Err(PslError::TooManyAtoms(atoms.len()));
    }
    for m in &atoms {
        if let Some(agent) = &m.agent {
            if *agent != config.name {
                return Err(PslError::UnknownAgent(agent.clone()));
            }
        }
    }
    Ok(())
}

pub fn verify(
    scenario: &Scenario,
    f: &Formula,
    options: &VerifyOptions,
) -> Result<Verdict, CheckError> {
    let started = Instant::now();
    check_atoms(f, &options.config)?;
    let atoms = f.atoms();
    let automaton = negated_automaton(f);
    let mut space = StateSpace::new(scenario, &options.config, &atoms);
    let result = Search::new(&mut space, &automaton, options.step_bound)
        .run(JointState::initial(scenario))?;

    let counterexample = match result.lasso {
        None => None,
        Some((prefix, cycle)) => {
            let steps = |ids: &[u32],
                         space: &mut StateSpace,
                         before: Option<u32>|
             -> Result<Vec<TraceStep>, PslError> {
                let mut out = Vec::new();
                let mut prev = before;
                for &id in ids {
                    let via = match prev {
                        Some(p) => space.edge(p, id)?,
                        None => Vec::new(),
                    };
                    out.push(TraceStep {
                        state: space.states[id as usize].clone(),
                        via,
                        valuation: bits(space.valuation[id as usize], atoms.len()),
                    });
                    prev = Some(id);
                }
                Ok(out)
            };
            let prefix_steps = steps(&prefix, &mut space, None)?;
            let cycle_steps = steps(&cycle, &mut space, prefix.last().copied())?;
            let closing = space.edge(*cycle.last().expect("non-empty loop"), cycle[0])?;
            Some(Counterexample {
                formula: f.to_string(),
                atoms: atoms.iter().map(|a| a.to_string()).collect(),
                config: options.config.clone(),
                prefix: prefix_steps,
                cycle: cycle_steps,
                closing,
            })
        }
    };
    let status = match (&counterexample, result.bounded) {
        (Some(_), _) => Status::Violated,
        (None, true) => Status::Bounded,
        (None, false) => Status::Holds,
    };
    Ok(Verdict {
        status,
        formula: f.to_string(),
        counterexample,
        stats: Stats {
            states: result.system_states,
            max_depth: result.max_depth,
            automaton_states: automaton.states,
            product_states: result.product_states,
            runtime: started.elapsed(),
        },
    })
}

fn bits(v: u64, n: usize) -> Vec<bool> {
    (0..n).map(|i| v >> i & 1 == 1).collect()
}

fn describe(step: &TraceStep, atoms: &[String]) -> String {
    let s = &step.state;
    let action = match (&s.fault, s.agent.halted, s.agent.last_action) {
        (Some(f), _, _) => format!("fault: {f}"),
        (None, true, _) => "halted".to_owned(),
        (None, false, Some(a)) => a.to_string(),
        (None, false, None) => "-".to_owned(),
    };
    let goals: Vec<String> = s.agent.goal_atoms().iter().map(|g| g.to_string()).collect();
    let holding: Vec<&str> = atoms
        .iter()
        .zip(&step.valuation)
        .filter(|(_, v)| **v)
        .map(|(a, _)| a.as_str())
        .collect();
    format!(
        "pos {} | action {} | goals [{}] | true [{}]",
        s.env.position,
        action,
        goals.join(", "),
        holding.join("; ")
    )
}

pub fn report(v: &Verdict) -> String {
    let mut out = String::new();
    match v.status {
        Status::Holds => out.push_str("PROPERTY HOLDS\n"),
        Status::Violated => out.push_str("PROPERTY VIOLATED\n"),
        Status::Bounded => {
            out.push_str("BOUNDED: not exhaustive (step bound reached, no violation found)\n")
        }
    }
    if let Some(cx) = &v.counterexample {
        writeln!(out, "counterexample prefix:").unwrap();
        let mut k = 0;
        for s in &cx.prefix {
            writeln!(out, "  {k:>4} | {}", describe(s, &cx.atoms)).unwrap();
            k += 1;
        }
        writeln!(out, "counterexample loop:").unwrap();
        for s in &cx.cycle {
            writeln!(out, "  {k:>4} | {}", describe(s, &cx.atoms)).unwrap();
            k += 1;
        }
    }
    out.push_str(&v.stats.block());
    out
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ReplayError {
    #[error("malformed trace: {0}")]
    Malformed(String),
    #[error("divergence at step {step}: {reason}")]
    Divergence { step: usize, reason: String },
}

/// Re-executes the recorded branch choices from the scenario's initial state
/// and compares every state and valuation with the recorded ones.
pub fn replay(scenario: &Scenario, cx: &Counterexample) -> Result<(), ReplayError> {
    if cx.cycle.is_empty() {
        return Err(ReplayError::Malformed("empty loop".into()));
    }
    let f = parse_property(&cx.formula).map_err(|e| ReplayError::Malformed(e.to_string()))?;
    let atoms = f.atoms();
    let names: Vec<String> = atoms.iter().map(|a| a.to_string()).collect();
    if names != cx.atoms {
        return Err(ReplayError::Malformed(
            "atom list does not match the formula".into(),
        ));
    }
    let valuation = |s: &JointState| {
        s.valuation(scenario, &atoms, &cx.config.name)
            .map(|v| bits(v, atoms.len()))
            .map_err(|e| ReplayError::Malformed(e.to_string()))
    };
    let steps: Vec<&TraceStep> = cx.steps().collect();
    let first = steps[0];
    if first.state != JointState::initial(scenario) {
        return Err(ReplayError::Divergence {
            step: 0,
            reason: "first state is not the initial state".into(),
        });
    }
    let check = |k: usize, s: &JointState, expected: &[bool]| -> Result<(), ReplayError> {
        if valuation(s)? != expected {
            return Err(ReplayError::Divergence {
                step: k,
                reason: "recorded valuation differs".into(),
            });
        }
        Ok(())
    };
    check(0, &first.state, &first.valuation)?;
    let advance = |k: usize, from: &JointState, via: &[BranchChoice], to: &JointState| {
        let succ = successors(scenario, &cx.config, from);
        let Some(found) = succ.iter().find(|s| s.choices == via) else {
            return Err(ReplayError::Divergence {
                step: k,
                reason: "recorded branch choice is not available".into(),
            });
        };
        if found.state != *to {
            return Err(ReplayError::Divergence {
                step: k,
                reason: "state differs from the recorded one".into(),
            });
        }
        Ok(())
    };
    for k in 1..steps.len() {
        advance(k, &steps[k - 1].state, &steps[k].via, &steps[k].state)?;
        check(k, &steps[k].state, &steps[k].valuation)?;
    }
    advance(
        steps.len(),
        &steps[steps.len() - 1].state,
        &cx.closing,
        &cx.cycle[0].state,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::load_scenario;

    fn table1() -> Scenario {
        load_scenario(
            "grid 5\nstart 2 1\nride 4 1 4 0\nobstacle 1 1 any\nobstacle 2 2 any\nobstacle 2 0 any\n",
        )
        .unwrap()
    }

    fn check(sc: &Scenario, text: &str) -> Verdict {
        verify(
            sc,
            &parse_property(text).unwrap(),
            &VerifyOptions::default(),
        )
        .unwrap()
    }

    #[test]
    fn table1_start_branches_27_ways() {
        let sc = table1();
        let succ = successors(&sc, &AgentConfig::default(), &JointState::initial(&sc));
        assert_eq!(succ.len(), 27);
        let total: f64 = succ.iter().map(|s| s.probability).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn halted_state_stutters() {
        let sc = load_scenario("grid 3\nstart 0 0\n").unwrap();
        let mut s = JointState::initial(&sc);
        s.agent.halted = true;
        let succ = successors(&sc, &AgentConfig::default(), &s);
        assert_eq!(succ.len(), 1);
        assert_eq!(succ[0].state, s);
    }

    #[test]
    fn never_unavoidable_fails_at_start() {
        let sc = table1();
        let v = check(&sc, "[] ~ B vehicle unavoidable_collision(_,_)");
        assert_eq!(v.status, Status::Violated);
        let cx = v.counterexample.as_ref().unwrap();
        assert!(cx
            .steps()
            .any(|s| s.valuation[0] && s.state.env.position == crate::grid::Coordinate::new(2, 1)));
        assert_eq!(replay(&sc, cx), Ok(()));
    }

    #[test]
    fn tautology_holds() {
        let v = check(&table1(), "[] (B vehicle x(_) | ~ B vehicle x(_))");
        assert_eq!(v.status, Status::Holds);
        assert!(report(&v).starts_with("PROPERTY HOLDS\n"));
    }

    #[test]
    fn unknown_agent_is_rejected() {
        let f = parse_property("<> B robot at(_,_)").unwrap();
        assert_eq!(
            verify(&table1(), &f, &VerifyOptions::default()),
            Err(CheckError::Property(PslError::UnknownAgent("robot".into())))
        );
    }

    #[test]
    fn tiny_bound_is_reported() {
        let sc = table1();
        let opts = VerifyOptions {
            step_bound: 3,
            ..VerifyOptions::default()
        };
        let v = verify(
            &sc,
            &parse_property("[] ~ B vehicle collided(_,_,high)").unwrap(),
            &opts,
        )
        .unwrap();
        assert_eq!(v.status, Status::Bounded);
        assert!(report(&v).starts_with("BOUNDED"));
    }

    #[test]
    fn replay_rejects_tampering_and_empty_loops() {
        let sc = table1();
        let v = check(&sc, "[] ~ B vehicle unavoidable_collision(_,_)");
        let cx = v.counterexample.unwrap();
        let mut bad = cx.clone();
        let k = bad.prefix.len().min(1);
        let step = if k < bad.prefix.len() {
            &mut bad.prefix[k]
        } else {
            &mut bad.cycle[0]
        };
        step.state.agent.last_action = Some(crate::agent::Action::GetRide);
        assert!(matches!(
            replay(&sc, &bad),
            Err(ReplayError::Divergence { .. })
        ));
        let mut empty = cx;
        empty.cycle.clear();
        assert!(matches!(
            replay(&sc, &empty),
            Err(ReplayError::Malformed(_))
        ));
    }
}

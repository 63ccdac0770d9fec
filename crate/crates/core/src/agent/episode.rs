//! Whole episodes: from the initial state until the agent halts, faults or
//! runs out of steps.

use std::fmt;

use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Action, AgentConfig};
use crate::checker::system::{successors, BranchChoice, JointState, Successor};
use crate::grid::{Coordinate, Scenario};

/// Picks one successor at a branch point. Only called with two or more
/// options.
pub trait ChoiceResolver {
    fn choose(&mut self, options: &[Successor]) -> usize;
}

/// Samples branches by their probabilities from a seeded stream.
pub struct SeededResolver {
    rng: ChaCha8Rng,
}

impl SeededResolver {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }
}

impl ChoiceResolver for SeededResolver {
    fn choose(&mut self, options: &[Successor]) -> usize {
        match WeightedIndex::new(options.iter().map(|s| s.probability)) {
            Ok(dist) => dist.sample(&mut self.rng),
            Err(_) => 0,
        }
    }
}

/// Replays a fixed list of choice indices, then falls back to the first.
pub struct ScriptedResolver {
    script: std::vec::IntoIter<usize>,
}

impl ScriptedResolver {
    pub fn new(script: Vec<usize>) -> Self {
        Self {
            script: script.into_iter(),
        }
    }
}

impl ChoiceResolver for ScriptedResolver {
    fn choose(&mut self, options: &[Successor]) -> usize {
        self.script.next().unwrap_or(0).min(options.len() - 1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cycle {
    pub step: usize,
    /// Where the vehicle was when it decided.
    pub position: Coordinate,
    /// `None` is the halt step.
    pub action: Option<Action>,
    pub added_beliefs: Vec<String>,
    pub goals: Vec<String>,
    pub choices: Vec<BranchChoice>,
}

impl fmt::Display for Cycle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let action = self
            .action
            .map_or_else(|| "halt".to_owned(), |a| a.to_string());
        write!(
            f,
            "step {} | pos {} | action {} | +beliefs [{}] | goals [{}]",
            self.step,
            self.position,
            action,
            self.added_beliefs.join(", "),
            self.goals.join(", ")
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EpisodeEnd {
    Halted,
    Fault { message: String },
    StepBound,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Run {
    pub cycles: Vec<Cycle>,
    /// `states[0]` is the initial state; `states[k]` follows cycle `k`.
    pub states: Vec<JointState>,
    pub end: EpisodeEnd,
}

impl Run {
    pub fn actions(&self) -> impl Iterator<Item = Action> + '_ {
        self.cycles.iter().filter_map(|c| c.action)
    }

    pub fn count(&self, name: &str) -> usize {
        self.actions().filter(|a| a.name() == name).count()
    }

    pub fn final_state(&self) -> &JointState {
        self.states.last().expect("a run holds its initial state")
    }
}

impl fmt::Display for Run {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.cycles {
            writeln!(f, "{c}")?;
        }
        match &self.end {
            EpisodeEnd::Halted => writeln!(f, "end halted"),
            EpisodeEnd::Fault { message } => writeln!(f, "end fault: {message}"),
            EpisodeEnd::StepBound => writeln!(f, "end step bound exhausted"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Simulate { seed: u64 },
    Enumerate,
}

fn cycle(step: usize, from: &JointState, succ: &Successor) -> Cycle {
    let before = from.agent.belief_atoms();
    let after = &succ.state.agent;
    Cycle {
        step,
        position: after.position().unwrap_or(from.env.position),
        action: if after.halted && !from.agent.halted {
            None
        } else {
            after.last_action
        },
        added_beliefs: after
            .belief_atoms()
            .into_iter()
            .filter(|b| !before.contains(b))
            .map(|b| b.to_string())
            .collect(),
        goals: after.goal_atoms().iter().map(|g| g.to_string()).collect(),
        choices: succ.choices.clone(),
    }
}

fn end_of(s: &JointState) -> Option<EpisodeEnd> {
    if let Some(message) = &s.fault {
        Some(EpisodeEnd::Fault {
            message: message.clone(),
        })
    } else if s.agent.halted {
        Some(EpisodeEnd::Halted)
    } else {
        None
    }
}

/// One run, branch points settled by `resolver`.
pub fn simulate(
    scenario: &Scenario,
    config: &AgentConfig,
    resolver: &mut dyn ChoiceResolver,
    max_steps: usize,
) -> Run {
    let mut states = vec![JointState::initial(scenario)];
    let mut cycles = Vec::new();
    loop {
        let current = states.last().expect("non-empty");
        if let Some(end) = end_of(current) {
            return Run {
                cycles,
                states,
                end,
            };
        }
        if cycles.len() >= max_steps {
            return Run {
                cycles,
                states,
                end: EpisodeEnd::StepBound,
            };
        }
        let mut succ = successors(scenario, config, current);
        let pick = if succ.len() == 1 {
            0
        } else {
            resolver.choose(&succ)
        };
        let chosen = succ.swap_remove(pick);
        cycles.push(cycle(cycles.len() + 1, current, &chosen));
        states.push(chosen.state);
    }
}

/// Every run up to `max_steps` cycles, in branch order.
pub fn enumerate(scenario: &Scenario, config: &AgentConfig, max_steps: usize) -> Vec<Run> {
    let mut out = Vec::new();
    let mut stack = vec![(vec![JointState::initial(scenario)], Vec::<Cycle>::new())];
    while let Some((states, cycles)) = stack.pop() {
        let current = states.last().expect("non-empty");
        if let Some(end) = end_of(current) {
            out.push(Run {
                cycles,
                states,
                end,
            });
            continue;
        }
        if cycles.len() >= max_steps {
            out.push(Run {
                cycles,
                states,
                end: EpisodeEnd::StepBound,
            });
            continue;
        }
        let succ = successors(scenario, config, current);
        for s in succ.iter().rev() {
            let mut c = cycles.clone();
            c.push(cycle(c.len() + 1, current, s));
            let mut st = states.clone();
            st.push(s.state.clone());
            stack.push((st, c));
        }
    }
    out
}

pub fn run_episode(
    scenario: &Scenario,
    mode: Mode,
    config: &AgentConfig,
    max_steps: usize,
) -> Vec<Run> {
    match mode {
        Mode::Simulate { seed } => vec![simulate(
            scenario,
            config,
            &mut SeededResolver::new(seed),
            max_steps,
        )],
        Mode::Enumerate => enumerate(scenario, config, max_steps),
    }
}

//! The closed system: environment and agent advancing in lock step.
//!
//! One transition is one agent cycle. Before the agent perceives, every
//! neighboring `any` obstacle is given a damage class (all joint assignments
//! are successors); a collision manoeuvre then splits into the collided and
//! escaped outcomes. Halted and faulted states repeat forever.

use serde::{Deserialize, Serialize};

use crate::agent::{Action, AgentConfig, AgentState};
use crate::grid::{
    next_ride, perceive, step_vehicle, CollisionOutcome, Coordinate, DamageLevel, EnvState,
    Scenario, StepOutcome,
};
use crate::psl::{eval_modal_atom, GroundAtom, ModalAtom, Observation, PslError};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct JointState {
    pub env: EnvState,
    pub agent: AgentState,
    /// Set when the environment rejected the agent's action.
    pub fault: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BranchChoice {
    Damage {
        assignment: Vec<(Coordinate, DamageLevel)>,
    },
    Collision {
        outcome: CollisionOutcome,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Successor {
    /// Branch choices taken on this transition, in the order they were made.
    pub choices: Vec<BranchChoice>,
    pub state: JointState,
    pub probability: f64,
}

impl JointState {
    pub fn initial(scenario: &Scenario) -> Self {
        Self {
            env: scenario.initial_state(),
            agent: AgentState::new(scenario.n),
            fault: None,
        }
    }

    /// No further progress: the successor is the state itself.
    pub fn is_terminal(&self) -> bool {
        self.agent.halted || self.fault.is_some()
    }

    /// Truth of each atom in this state; atom `i` is bit `i`.
    pub fn valuation(
        &self,
        scenario: &Scenario,
        atoms: &[ModalAtom],
        agent: &str,
    ) -> Result<u64, PslError> {
        if atoms.len() > 64 {
            return Err(PslError::TooManyAtoms(atoms.len()));
        }
        let beliefs = self.agent.belief_atoms();
        let goals = self.agent.goal_atoms();
        let intentions = self.agent.intention_atoms();
        let last = self.agent.last_action.map(|a| a.to_atom());
        let committed = self.agent.committed_action().map(Action::to_atom);
        let percepts: Vec<GroundAtom> = perceive(scenario, &self.env)
            .iter()
            .map(|p| p.to_atom())
            .collect();
        let obs = Observation {
            agent,
            beliefs: &beliefs,
            goals: &goals,
            last_action: last.as_ref(),
            intentions: &intentions,
            committed_action: committed.as_ref(),
            percepts: &percepts,
        };
        let mut v = 0u64;
        for (i, m) in atoms.iter().enumerate() {
            if eval_modal_atom(m, &obs)? {
                v |= 1 << i;
            }
        }
        Ok(v)
    }
}

/// Every joint damage assignment for `cells`, each with its probability.
/// The last cell varies fastest; levels follow [`DamageLevel::BRANCH_ORDER`].
pub fn damage_assignments(
    scenario: &Scenario,
    cells: &[Coordinate],
) -> Vec<(Vec<(Coordinate, DamageLevel)>, f64)> {
    let mut out = vec![(Vec::new(), 1.0)];
    for &cell in cells {
        out = out
            .into_iter()
            .flat_map(|(prefix, p)| {
                DamageLevel::BRANCH_ORDER.into_iter().map(move |level| {
                    let mut next: Vec<(Coordinate, DamageLevel)> = prefix.clone();
                    next.push((cell, level));
                    (next, p * scenario.collision_model.level_probability(level))
                })
            })
            .collect();
    }
    out
}

/// Environment response to `action`; more than one result only for a
/// collision manoeuvre.
fn execute(
    scenario: &Scenario,
    env: &EnvState,
    agent: &AgentState,
    action: Action,
) -> Result<Vec<(Option<CollisionOutcome>, EnvState)>, String> {
    let mut env = env.clone();
    env.ride_reply = None;
    match action {
        Action::Drive { direction } => {
            let intent = agent.collision_intent(direction);
            match step_vehicle(scenario, &env, direction, intent).map_err(|e| e.to_string())? {
                StepOutcome::Moved(e) => Ok(vec![(None, e)]),
                StepOutcome::Branch { collided, escaped } => Ok(vec![
                    (Some(CollisionOutcome::Collided), collided),
                    (Some(CollisionOutcome::Escaped), escaped),
                ]),
            }
        }
        Action::GetRide => Ok(vec![(None, next_ride(scenario, &env).0)]),
        _ => Ok(vec![(None, env)]),
    }
}

pub fn successors(scenario: &Scenario, config: &AgentConfig, s: &JointState) -> Vec<Successor> {
    if s.is_terminal() {
        return vec![Successor {
            choices: Vec::new(),
            state: s.clone(),
            probability: 1.0,
        }];
    }
    let unresolved = s.env.unresolved_neighbors(scenario);
    let resolutions: Vec<(Vec<BranchChoice>, EnvState, f64)> = if unresolved.is_empty() {
        vec![(Vec::new(), s.env.clone(), 1.0)]
    } else {
        damage_assignments(scenario, &unresolved)
            .into_iter()
            .map(|(assignment, p)| {
                let env = s.env.resolve(&assignment);
                (vec![BranchChoice::Damage { assignment }], env, p)
            })
            .collect()
    };

    let model = &scenario.collision_model;
    let mut out = Vec::new();
    for (choices, env, p) in resolutions {
        let percepts = perceive(scenario, &env);
        let (agent, action) = s.agent.deliberate(&percepts, config);
        let Some(action) = action else {
            out.push(Successor {
                choices,
                state: JointState {
                    env,
                    agent,
                    fault: None,
                },
                probability: p,
            });
            continue;
        };
        match execute(scenario, &env, &agent, action) {
            Ok(results) => {
                for (outcome, next_env) in results {
                    let mut c = choices.clone();
                    let mut q = p;
                    if let Some(outcome) = outcome {
                        c.push(BranchChoice::Collision { outcome });
                        q *= match outcome {
                            CollisionOutcome::Collided => model.collide,
                            CollisionOutcome::Escaped => model.escape(),
                        };
                    }
                    out.push(Successor {
                        choices: c,
                        state: JointState {
                            env: next_env,
                            agent: agent.clone(),
                            fault: None,
                        },
                        probability: q,
                    });
                }
            }
            Err(fault) => out.push(Successor {
                choices,
                state: JointState {
                    env,
                    agent,
                    fault: Some(fault),
                },
                probability: p,
            }),
        }
    }
    out
}

/// The reachable part of the joint system, states numbered in breadth-first
/// order from the initial state (id 0).
#[derive(Debug, Clone)]
pub struct StateGraph {
    pub states: Vec<JointState>,
    pub edges: Vec<Vec<(usize, Vec<BranchChoice>)>>,
    /// Whether exploration stopped at `limit` states.
    pub truncated: bool,
}

impl StateGraph {
    /// Ids of states from which some state satisfying `target` is reachable.
    pub fn can_reach(&self, target: impl Fn(&JointState) -> bool) -> Vec<bool> {
        let mut preds = vec![Vec::new(); self.states.len()];
        for (a, out) in self.edges.iter().enumerate() {
            for (b, _) in out {
                preds[*b].push(a);
            }
        }
        let mut mark: Vec<bool> = self.states.iter().map(target).collect();
        let mut queue: std::collections::VecDeque<usize> =
            (0..mark.len()).filter(|i| mark[*i]).collect();
        while let Some(b) = queue.pop_front() {
            for &a in &preds[b] {
                if !mark[a] {
                    mark[a] = true;
                    queue.push_back(a);
                }
            }
        }
        mark
    }
}

/// Breadth-first exploration of at most `limit` states.
pub fn explore(scenario: &Scenario, config: &AgentConfig, limit: usize) -> StateGraph {
    use std::collections::HashMap;
    let initial = JointState::initial(scenario);
    let mut index = HashMap::from([(initial.clone(), 0usize)]);
    let mut states = vec![initial];
    let mut edges = Vec::new();
    let mut truncated = false;
    let mut next = 0;
    while next < states.len() {
        let mut out = Vec::new();
        for s in successors(scenario, config, &states[next]) {
            let id = match index.get(&s.state) {
                Some(&id) => id,
                None if states.len() < limit => {
                    let id = states.len();
                    index.insert(s.state.clone(), id);
                    states.push(s.state);
                    id
                }
                None => {
                    truncated = true;
                    continue;
                }
            };
            out.push((id, s.choices));
        }
        edges.push(out);
        next += 1;
    }
    StateGraph {
        states,
        edges,
        truncated,
    }
}

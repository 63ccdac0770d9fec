//! Nested depth-first search over the product of the joint system with a
//! Büchi automaton, built on the fly.

use std::collections::{HashMap, HashSet};

use super::system::{successors, BranchChoice, JointState};
use crate::agent::AgentConfig;
use crate::buchi::BuchiAutomaton;
use crate::grid::Scenario;
use crate::psl::{ModalAtom, PslError};

pub(crate) type StateId = u32;
type Node = u64;
type Edges = Vec<(StateId, Vec<BranchChoice>)>;

fn node(s: StateId, q: usize) -> Node {
    (s as u64) << 32 | q as u64
}

fn split(n: Node) -> (StateId, usize) {
    ((n >> 32) as StateId, (n & 0xffff_ffff) as usize)
}

/// Interned joint states with lazily computed successors and valuations.
pub(crate) struct StateSpace<'a> {
    scenario: &'a Scenario,
    config: &'a AgentConfig,
    atoms: &'a [ModalAtom],
    pub states: Vec<JointState>,
    index: HashMap<JointState, StateId>,
    succ: Vec<Option<Edges>>,
    pub valuation: Vec<u64>,
}

impl<'a> StateSpace<'a> {
    pub fn new(scenario: &'a Scenario, config: &'a AgentConfig, atoms: &'a [ModalAtom]) -> Self {
        Self {
            scenario,
            config,
            atoms,
            states: Vec::new(),
            index: HashMap::new(),
            succ: Vec::new(),
            valuation: Vec::new(),
        }
    }

    pub fn intern(&mut self, s: JointState) -> Result<StateId, PslError> {
        if let Some(&id) = self.index.get(&s) {
            return Ok(id);
        }
        let v = s.valuation(self.scenario, self.atoms, &self.config.name)?;
        let id = self.states.len() as StateId;
        self.index.insert(s.clone(), id);
        self.states.push(s);
        self.succ.push(None);
        self.valuation.push(v);
        Ok(id)
    }

    pub fn successors(&mut self, id: StateId) -> Result<&[(StateId, Vec<BranchChoice>)], PslError> {
        if self.succ[id as usize].is_none() {
            let next = successors(self.scenario, self.config, &self.states[id as usize]);
            let mut out = Vec::with_capacity(next.len());
            for s in next {
                out.push((self.intern(s.state)?, s.choices));
            }
            self.succ[id as usize] = Some(out);
        }
        Ok(self.succ[id as usize].as_deref().expect("just filled"))
    }

    /// Branch choices of the first system edge from `a` to `b`.
    pub fn edge(&mut self, a: StateId, b: StateId) -> Result<Vec<BranchChoice>, PslError> {
        Ok(self
            .successors(a)?
            .iter()
            .find(|(t, _)| *t == b)
            .map(|(_, c)| c.clone())
            .expect("lasso edges are system edges"))
    }
}

pub(crate) struct SearchResult {
    /// Product lasso as system state ids: prefix, then the loop.
    pub lasso: Option<(Vec<StateId>, Vec<StateId>)>,
    pub bounded: bool,
    pub max_depth: usize,
    pub product_states: usize,
    pub system_states: usize,
}

struct Frame {
    node: Node,
    succ: Vec<Node>,
    pos: usize,
}

pub(crate) struct Search<'s, 'a> {
    space: &'s mut StateSpace<'a>,
    automaton: &'s BuchiAutomaton,
    step_bound: usize,
    visited: HashSet<Node>,
    on_stack: HashSet<Node>,
    flagged: HashSet<Node>,
    truncated: HashSet<Node>,
}

impl<'s, 'a> Search<'s, 'a> {
    pub fn new(
        space: &'s mut StateSpace<'a>,
        automaton: &'s BuchiAutomaton,
        step_bound: usize,
    ) -> Self {
        Self {
            space,
            automaton,
            step_bound,
            visited: HashSet::new(),
            on_stack: HashSet::new(),
            flagged: HashSet::new(),
            truncated: HashSet::new(),
        }
    }

    fn product_successors(&mut self, n: Node) -> Result<Vec<Node>, PslError> {
        if self.truncated.contains(&n) {
            return Ok(Vec::new());
        }
        let (s, q) = split(n);
        let v = self.space.valuation[s as usize];
        let targets: Vec<StateId> = self.space.successors(s)?.iter().map(|(t, _)| *t).collect();
        let qs: Vec<usize> = self.automaton.step(q, v).collect();
        let mut out = Vec::with_capacity(targets.len() * qs.len());
        for t in targets {
            for &r in &qs {
                out.push(node(t, r));
            }
        }
        Ok(out)
    }

    pub fn run(mut self, initial: JointState) -> Result<SearchResult, PslError> {
        let s0 = self.space.intern(initial)?;
        let mut max_depth = 0;
        let mut lasso = None;
        'roots: for &q0 in &self.automaton.initial {
            let root = node(s0, q0);
            if self.visited.contains(&root) {
                continue;
            }
            let mut stack = vec![self.enter(root, 0)?];
            max_depth = max_depth.max(1);
            while let Some(top) = stack.last_mut() {
                if top.pos < top.succ.len() {
                    let n = top.succ[top.pos];
                    top.pos += 1;
                    if !self.visited.contains(&n) {
                        let depth = stack.len();
                        stack.push(self.enter(n, depth)?);
                        max_depth = max_depth.max(stack.len());
                    }
                    continue;
                }
                let done = stack.pop().expect("non-empty");
                let (_, q) = split(done.node);
                if self.automaton.is_accepting(q) {
                    if let Some((inner, target)) = self.inner(done.node)? {
                        let mut outer: Vec<Node> = stack.iter().map(|f| f.node).collect();
                        outer.push(done.node);
                        let at = outer
                            .iter()
                            .position(|n| *n == target)
                            .expect("target on stack");
                        let prefix = outer[..at].iter().map(|n| split(*n).0).collect();
                        let cycle = outer[at..]
                            .iter()
                            .chain(inner.iter().skip(1))
                            .map(|n| split(*n).0)
                            .collect();
                        lasso = Some((prefix, cycle));
                        break 'roots;
                    }
                }
                self.on_stack.remove(&done.node);
            }
        }
        let system: HashSet<StateId> = self.visited.iter().map(|n| split(*n).0).collect();
        Ok(SearchResult {
            lasso,
            bounded: !self.truncated.is_empty(),
            max_depth,
            product_states: self.visited.len(),
            system_states: system.len(),
        })
    }

    fn enter(&mut self, n: Node, depth: usize) -> Result<Frame, PslError> {
        self.visited.insert(n);
        self.on_stack.insert(n);
        if depth >= self.step_bound {
            self.truncated.insert(n);
        }
        Ok(Frame {
            node: n,
            succ: self.product_successors(n)?,
            pos: 0,
        })
    }

    /// Searches from an accepting `seed` for a node on the outer stack.
    /// Returns the inner path (starting at `seed`) and the node it closes on.
    fn inner(&mut self, seed: Node) -> Result<Option<(Vec<Node>, Node)>, PslError> {
        self.flagged.insert(seed);
        let mut stack = vec![Frame {
            node: seed,
            succ: self.product_successors(seed)?,
            pos: 0,
        }];
        while let Some(top) = stack.last_mut() {
            if top.pos < top.succ.len() {
                let n = top.succ[top.pos];
                top.pos += 1;
                if self.on_stack.contains(&n) {
                    let path = stack.iter().map(|f| f.node).collect();
                    return Ok(Some((path, n)));
                }
                if self.flagged.insert(n) {
                    let succ = self.product_successors(n)?;
                    stack.push(Frame {
                        node: n,
                        succ,
                        pos: 0,
                    });
                }
                continue;
            }
            stack.pop();
        }
        Ok(None)
    }
}

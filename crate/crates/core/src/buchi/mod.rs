//! Büchi automata over modal-atom valuations.
//!
//! [`translate`] builds a generalized automaton with the expand-node tableau:
//! each node collects the formulas that must hold now (`old`) and from the
//! next position on (`next`); nodes with identical obligations are merged.
//! Transitions are labelled with the literals of their source node, so a run
//! reads letter `i` while leaving its `i`-th state.

mod tableau;

use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::psl::{Formula, ModalAtom};

pub use tableau::translate_over;

/// Truth assignment to the atoms of an automaton; bit `i` is atom `i`.
pub type Valuation = u64;

/// Atoms that must be true and atoms that must be false.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Constraint {
    pub require: BTreeSet<usize>,
    pub forbid: BTreeSet<usize>,
}

impl Constraint {
    pub fn is_satisfiable(&self) -> bool {
        self.require.is_disjoint(&self.forbid)
    }

    fn masks(&self) -> (u64, u64) {
        let mask = |s: &BTreeSet<usize>| s.iter().fold(0u64, |m, i| m | (1 << i));
        (mask(&self.require), mask(&self.forbid))
    }

    pub fn admits(&self, v: Valuation) -> bool {
        let (req, forb) = self.masks();
        v & req == req && v & forb == 0
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transition {
    pub src: usize,
    pub dst: usize,
    pub label: Constraint,
}

#[derive(Debug, Clone, Copy)]
struct Edge {
    dst: usize,
    req: u64,
    forb: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BuchiAutomaton {
    pub atoms: Vec<ModalAtom>,
    pub states: usize,
    pub initial: Vec<usize>,
    pub transitions: Vec<Transition>,
    /// Generalized acceptance: a run must visit every set infinitely often.
    /// After [`degeneralize`] there is exactly one set.
    pub accepting: Vec<BTreeSet<usize>>,
    #[serde(skip)]
    out: Vec<Vec<Edge>>,
    #[serde(skip)]
    acc_bits: Vec<u64>,
}

impl BuchiAutomaton {
    pub fn new(
        atoms: Vec<ModalAtom>,
        states: usize,
        initial: Vec<usize>,
        transitions: Vec<Transition>,
        accepting: Vec<BTreeSet<usize>>,
    ) -> Self {
        assert!(accepting.len() <= 64, "at most 64 acceptance sets");
        let mut out = vec![Vec::new(); states];
        for t in &transitions {
            let (req, forb) = t.label.masks();
            out[t.src].push(Edge {
                dst: t.dst,
                req,
                forb,
            });
        }
        let mut acc_bits = vec![0u64; states];
        for (i, set) in accepting.iter().enumerate() {
            for &q in set {
                acc_bits[q] |= 1 << i;
            }
        }
        Self {
            atoms,
            states,
            initial,
            transitions,
            accepting,
            out,
            acc_bits,
        }
    }

    /// Successor states of `q` on letter `v`, in transition order.
    pub fn step(&self, q: usize, v: Valuation) -> impl Iterator<Item = usize> + '_ {
        self.out[q]
            .iter()
            .filter(move |e| v & e.req == e.req && v & e.forb == 0)
            .map(|e| e.dst)
    }

    /// Accepting in the single-set sense; panics on generalized automata
    /// with more than one set.
    pub fn is_accepting(&self, q: usize) -> bool {
        match self.accepting.len() {
            0 => true,
            1 => self.acc_bits[q] & 1 == 1,
            k => panic!("automaton has {k} acceptance sets; degeneralize first"),
        }
    }

    fn full_mask(&self) -> u64 {
        match self.accepting.len() {
            64 => u64::MAX,
            k => (1u64 << k) - 1,
        }
    }
}

/// Translates an NNF formula over its own atoms.
pub fn translate(f: &Formula) -> BuchiAutomaton {
    translate_over(f, &f.atoms())
}

/// Replaces generalized acceptance by a single set with the counter
/// construction, keeping only reachable states.
pub fn degeneralize(g: &BuchiAutomaton) -> BuchiAutomaton {
    let k = g.accepting.len();
    if k == 0 {
        let all = (0..g.states).collect();
        return BuchiAutomaton::new(
            g.atoms.clone(),
            g.states,
            g.initial.clone(),
            g.transitions.clone(),
            vec![all],
        );
    }
    if k == 1 {
        return g.clone();
    }
    let code = |q: usize, i: usize| q * k + i;
    let mut index = vec![usize::MAX; g.states * k];
    let mut order = Vec::new();
    let mut queue = VecDeque::new();
    for &q in &g.initial {
        let c = code(q, 0);
        if index[c] == usize::MAX {
            index[c] = order.len();
            order.push((q, 0));
            queue.push_back((q, 0));
        }
    }
    let mut transitions = Vec::new();
    let mut by_src: Vec<Vec<&Transition>> = vec![Vec::new(); g.states];
    for t in &g.transitions {
        by_src[t.src].push(t);
    }
    while let Some((q, i)) = queue.pop_front() {
        let j = if g.acc_bits[q] >> i & 1 == 1 {
            (i + 1) % k
        } else {
            i
        };
        for t in &by_src[q] {
            let c = code(t.dst, j);
            if index[c] == usize::MAX {
                index[c] = order.len();
                order.push((t.dst, j));
                queue.push_back((t.dst, j));
            }
            transitions.push(Transition {
                src: index[code(q, i)],
                dst: index[c],
                label: t.label.clone(),
            });
        }
    }
    let accepting = order
        .iter()
        .enumerate()
        .filter(|(_, (q, i))| *i == 0 && g.acc_bits[*q] & 1 == 1)
        .map(|(idx, _)| idx)
        .collect();
    let initial = g
        .initial
        .iter()
        .map(|&q| index[code(q, 0)])
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    BuchiAutomaton::new(
        g.atoms.clone(),
        order.len(),
        initial,
        transitions,
        vec![accepting],
    )
}

/// An ultimately periodic word `prefix · loop^ω`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LassoWord {
    pub prefix: Vec<Valuation>,
    pub cycle: Vec<Valuation>,
}

impl LassoWord {
    pub fn new(prefix: Vec<Valuation>, cycle: Vec<Valuation>) -> Self {
        assert!(!cycle.is_empty(), "lasso loop must be non-empty");
        Self { prefix, cycle }
    }

    pub fn len(&self) -> usize {
        self.prefix.len() + self.cycle.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn letter(&self, i: usize) -> Valuation {
        if i < self.prefix.len() {
            self.prefix[i]
        } else {
            self.cycle[i - self.prefix.len()]
        }
    }

    pub fn successor(&self, i: usize) -> usize {
        if i + 1 < self.len() {
            i + 1
        } else {
            self.prefix.len()
        }
    }
}

/// Whether some run of `a` on `w` meets every acceptance set infinitely
/// often: searches the product of `a` with the lasso positions for a
/// reachable non-trivial strongly connected component covering all sets.
pub fn accepts_lasso(a: &BuchiAutomaton, w: &LassoWord) -> bool {
    let n = w.len();
    let nodes = a.states * n;
    let full = a.full_mask();
    let succ = |node: usize| {
        let (q, i) = (node / n, node % n);
        let j = w.successor(i);
        a.step(q, w.letter(i)).map(move |r| r * n + j)
    };

    // Iterative Tarjan restricted to nodes reachable from the initial ones.
    const UNSEEN: u32 = u32::MAX;
    let mut index = vec![UNSEEN; nodes];
    let mut low = vec![0u32; nodes];
    let mut on_stack = vec![false; nodes];
    let mut stack: Vec<usize> = Vec::new();
    let mut counter = 0u32;
    let mut frames: Vec<(usize, Vec<usize>, usize)> = Vec::new();

    for &q0 in &a.initial {
        let root = q0 * n;
        if index[root] != UNSEEN {
            continue;
        }
        index[root] = counter;
        low[root] = counter;
        counter += 1;
        stack.push(root);
        on_stack[root] = true;
        frames.push((root, succ(root).collect(), 0));

        while let Some((v, children, pos)) = frames.last_mut() {
            let v = *v;
            if *pos < children.len() {
                let u = children[*pos];
                *pos += 1;
                if index[u] == UNSEEN {
                    index[u] = counter;
                    low[u] = counter;
                    counter += 1;
                    stack.push(u);
                    on_stack[u] = true;
                    let c = succ(u).collect();
                    frames.push((u, c, 0));
                } else if on_stack[u] {
                    low[v] = low[v].min(index[u]);
                }
                continue;
            }
            let self_loop = children.contains(&v);
            frames.pop();
            if let Some((parent, _, _)) = frames.last() {
                low[*parent] = low[*parent].min(low[v]);
            }
            if low[v] == index[v] {
                let mut covered = 0u64;
                let mut size = 0;
                loop {
                    let x = stack.pop().expect("tarjan stack underflow");
                    on_stack[x] = false;
                    covered |= a.acc_bits[x / n];
                    size += 1;
                    if x == v {
                        break;
                    }
                }
                if (size > 1 || self_loop) && covered & full == full {
                    return true;
                }
            }
        }
    }
    false
}

impl fmt::Display for BuchiAutomaton {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, atom) in self.atoms.iter().enumerate() {
            writeln!(f, "# p{i} = {atom}")?;
        }
        let initial: Vec<String> = self.initial.iter().map(|q| q.to_string()).collect();
        writeln!(
            f,
            "# states: {}, initial: {}, acceptance sets: {}",
            self.states,
            initial.join(","),
            self.accepting.len()
        )?;
        let names = |s: &BTreeSet<usize>| {
            s.iter()
                .map(|i| format!("p{i}"))
                .collect::<Vec<_>>()
                .join(",")
        };
        for t in &self.transitions {
            write!(
                f,
                "{} -> {} [req: {} | forb: {}]",
                t.src,
                t.dst,
                names(&t.label.require),
                names(&t.label.forbid)
            )?;
            let sets: Vec<String> = (0..self.accepting.len())
                .filter(|i| self.accepting[*i].contains(&t.src))
                .map(|i| i.to_string())
                .collect();
            if self.accepting.len() == 1 && !sets.is_empty() {
                write!(f, " {{acc}}")?;
            } else if self.accepting.len() > 1 && !sets.is_empty() {
                write!(f, " {{{}}}", sets.join(","))?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

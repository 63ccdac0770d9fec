use std::collections::{BTreeSet, HashMap};

use super::{BuchiAutomaton, Constraint, Transition};
use crate::psl::{to_nnf, Formula, ModalAtom};

type Id = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Node {
    Lit(usize, bool),
    And(Id, Id),
    Or(Id, Id),
    Until(Id, Id),
    Release(Id, Id),
    Eventually(Id),
    Always(Id),
}

#[derive(Default)]
struct Arena {
    nodes: Vec<Node>,
    index: HashMap<Node, Id>,
}

impl Arena {
    fn intern(&mut self, n: Node) -> Id {
        if let Some(&id) = self.index.get(&n) {
            return id;
        }
        let id = self.nodes.len() as Id;
        self.nodes.push(n);
        self.index.insert(n, id);
        id
    }

    fn build(&mut self, f: &Formula, atoms: &[ModalAtom]) -> Id {
        let lit = |m: &ModalAtom| {
            atoms
                .iter()
                .position(|a| a == m)
                .unwrap_or_else(|| panic!("atom `{m}` missing from the atom list"))
        };
        let node = match f {
            Formula::Atom(m) => Node::Lit(lit(m), true),
            Formula::Not(a) => match &**a {
                Formula::Atom(m) => Node::Lit(lit(m), false),
                _ => unreachable!("input is in negation normal form"),
            },
            Formula::And(a, b) => Node::And(self.build(a, atoms), self.build(b, atoms)),
            Formula::Or(a, b) => Node::Or(self.build(a, atoms), self.build(b, atoms)),
            Formula::Until(a, b) => Node::Until(self.build(a, atoms), self.build(b, atoms)),
            Formula::Release(a, b) => Node::Release(self.build(a, atoms), self.build(b, atoms)),
            Formula::Eventually(a) => Node::Eventually(self.build(a, atoms)),
            Formula::Always(a) => Node::Always(self.build(a, atoms)),
            Formula::Implies(..) => unreachable!("input is in negation normal form"),
        };
        self.intern(node)
    }
}

const INIT: usize = usize::MAX;

#[derive(Clone)]
struct Pending {
    incoming: BTreeSet<usize>,
    new: BTreeSet<Id>,
    old: BTreeSet<Id>,
    next: BTreeSet<Id>,
}

struct Done {
    incoming: BTreeSet<usize>,
    old: BTreeSet<Id>,
    next: BTreeSet<Id>,
}

/// Translates `f` (converted to NNF if needed) with valuation bits indexed
/// by position in `atoms`.
pub fn translate_over(f: &Formula, atoms: &[ModalAtom]) -> BuchiAutomaton {
    assert!(atoms.len() <= 64, "at most 64 atoms fit a valuation");
    let f = if f.is_nnf() { f.clone() } else { to_nnf(f) };
    let mut arena = Arena::default();
    let root = arena.build(&f, atoms);
    let nodes = &arena.nodes;

    let mut done: Vec<Done> = Vec::new();
    let mut work = vec![Pending {
        incoming: BTreeSet::from([INIT]),
        new: BTreeSet::from([root]),
        old: BTreeSet::new(),
        next: BTreeSet::new(),
    }];

    while let Some(mut nd) = work.pop() {
        let Some(&eta) = nd.new.iter().next() else {
            if let Some(d) = done
                .iter_mut()
                .find(|d| d.old == nd.old && d.next == nd.next)
            {
                d.incoming.extend(nd.incoming);
            } else {
                let id = done.len();
                work.push(Pending {
                    incoming: BTreeSet::from([id]),
                    new: nd.next.clone(),
                    old: BTreeSet::new(),
                    next: BTreeSet::new(),
                });
                done.push(Done {
                    incoming: nd.incoming,
                    old: nd.old,
                    next: nd.next,
                });
            }
            continue;
        };
        nd.new.remove(&eta);
        nd.old.insert(eta);

        let add = |p: &mut Pending, ids: &[Id]| {
            for &i in ids {
                if !p.old.contains(&i) {
                    p.new.insert(i);
                }
            }
        };
        match nodes[eta as usize] {
            Node::Lit(a, pos) => {
                let clash = arena.index.get(&Node::Lit(a, !pos));
                if clash.is_some_and(|c| nd.old.contains(c)) {
                    continue;
                }
                work.push(nd);
            }
            Node::And(x, y) => {
                add(&mut nd, &[x, y]);
                work.push(nd);
            }
            Node::Always(x) => {
                add(&mut nd, &[x]);
                nd.next.insert(eta);
                work.push(nd);
            }
            Node::Or(x, y) => {
                let mut second = nd.clone();
                add(&mut second, &[y]);
                add(&mut nd, &[x]);
                work.push(second);
                work.push(nd);
            }
            Node::Until(x, y) => {
                let mut second = nd.clone();
                add(&mut second, &[y]);
                add(&mut nd, &[x]);
                nd.next.insert(eta);
                work.push(second);
                work.push(nd);
            }
            Node::Release(x, y) => {
                let mut second = nd.clone();
                add(&mut second, &[x, y]);
                add(&mut nd, &[y]);
                nd.next.insert(eta);
                work.push(second);
                work.push(nd);
            }
            Node::Eventually(x) => {
                let mut second = nd.clone();
                add(&mut second, &[x]);
                nd.next.insert(eta);
                work.push(second);
                work.push(nd);
            }
        }
    }

    let label = |d: &Done| {
        let mut c = Constraint::default();
        for &id in &d.old {
            if let Node::Lit(a, pos) = nodes[id as usize] {
                if pos {
                    c.require.insert(a);
                } else {
                    c.forbid.insert(a);
                }
            }
        }
        c
    };

    let mut initial = Vec::new();
    let mut transitions = Vec::new();
    for (dst, d) in done.iter().enumerate() {
        for &src in &d.incoming {
            if src == INIT {
                initial.push(dst);
            } else {
                transitions.push(Transition {
                    src,
                    dst,
                    label: label(&done[src]),
                });
            }
        }
    }
    transitions.sort_by_key(|t| (t.src, t.dst));

    let mut accepting = Vec::new();
    for (id, n) in nodes.iter().enumerate() {
        let fulfilled = match *n {
            Node::Until(_, y) => y,
            Node::Eventually(x) => x,
            _ => continue,
        };
        let id = id as Id;
        accepting.push(
            done.iter()
                .enumerate()
                .filter(|(_, d)| !d.old.contains(&id) || d.old.contains(&fulfilled))
                .map(|(q, _)| q)
                .collect(),
        );
    }

    BuchiAutomaton::new(atoms.to_vec(), done.len(), initial, transitions, accepting)
}

//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::{HashMap, HashSet, VecDeque};
use std::path::PathBuf;

use avmc::agent::{AgentConfig, AgentState, Belief, Goal, RouteRecord};
use avmc::buchi::LassoWord;
use avmc::checker::negated_automaton;
use avmc::checker::system::explore;
use avmc::grid::{load_scenario, Axis, Coordinate, Direction, Percept, Scenario};
use avmc::psl::{parse_property, Formula, ModalAtom};
use proptest::prelude::*;
use rand::Rng;

pub fn scenario_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios")
}

pub fn bundled(name: &str) -> Scenario {
    let text = std::fs::read_to_string(scenario_dir().join(name)).expect("bundled scenario");
    load_scenario(&text).expect("bundled scenario parses")
}

pub fn bundled_names() -> Vec<String> {
    let mut names: Vec<String> = std::fs::read_dir(scenario_dir())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n.ends_with(".scn"))
        .collect();
    names.sort();
    names
}

pub fn damage_property() -> Formula {
    let text = std::fs::read_to_string(scenario_dir().join("damage.psl")).unwrap();
    parse_property(&text).unwrap()
}

pub fn modal(text: &str) -> ModalAtom {
    match parse_property(text).unwrap() {
        Formula::Atom(m) => m,
        other => panic!("not an atom: {other}"),
    }
}

/// Direct fixpoint evaluation of `f` at position 0 of `w`; bit `i` of a
/// letter is the truth of `atoms[i]`.
pub fn semantic_eval(f: &Formula, atoms: &[ModalAtom], w: &LassoWord) -> bool {
    sat(f, atoms, w)[0]
}

fn sat(f: &Formula, atoms: &[ModalAtom], w: &LassoWord) -> Vec<bool> {
    let n = w.prefix.len() + w.cycle.len();
    let letter = |i: usize| {
        if i < w.prefix.len() {
            w.prefix[i]
        } else {
            w.cycle[i - w.prefix.len()]
        }
    };
    let next = |i: usize| if i + 1 < n { i + 1 } else { w.prefix.len() };
    let until = |a: &[bool], b: &[bool]| {
        let mut x = vec![false; n];
        loop {
            let y: Vec<bool> = (0..n).map(|i| b[i] || (a[i] && x[next(i)])).collect();
            if y == x {
                return x;
            }
            x = y;
        }
    };
    let release = |a: &[bool], b: &[bool]| {
        let mut x = vec![true; n];
        loop {
            let y: Vec<bool> = (0..n).map(|i| b[i] && (a[i] || x[next(i)])).collect();
            if y == x {
                return x;
            }
            x = y;
        }
    };
    match f {
        Formula::Atom(m) => {
            let k = atoms.iter().position(|a| a == m).expect("atom listed");
            (0..n).map(|i| letter(i) >> k & 1 == 1).collect()
        }
        Formula::Not(a) => sat(a, atoms, w).into_iter().map(|v| !v).collect(),
        Formula::And(a, b) => zip(sat(a, atoms, w), sat(b, atoms, w), |x, y| x && y),
        Formula::Or(a, b) => zip(sat(a, atoms, w), sat(b, atoms, w), |x, y| x || y),
        Formula::Implies(a, b) => zip(sat(a, atoms, w), sat(b, atoms, w), |x, y| !x || y),
        Formula::Until(a, b) => until(&sat(a, atoms, w), &sat(b, atoms, w)),
        Formula::Release(a, b) => release(&sat(a, atoms, w), &sat(b, atoms, w)),
        Formula::Eventually(a) => until(&vec![true; n], &sat(a, atoms, w)),
        Formula::Always(a) => release(&vec![false; n], &sat(a, atoms, w)),
    }
}

fn zip(a: Vec<bool>, b: Vec<bool>, op: impl Fn(bool, bool) -> bool) -> Vec<bool> {
    a.into_iter().zip(b).map(|(x, y)| op(x, y)).collect()
}

/// Every lasso word over `bits` atoms with prefix length `0..=max_prefix`
/// and loop length `1..=max_loop`.
pub fn all_lasso_words(bits: u32, max_prefix: usize, max_loop: usize) -> Vec<LassoWord> {
    let letters = 1u64 << bits;
    let seqs = |len: usize| -> Vec<Vec<u64>> {
        let mut out = vec![Vec::new()];
        for _ in 0..len {
            out = out
                .into_iter()
                .flat_map(|s| {
                    (0..letters).map(move |l| {
                        let mut t = s.clone();
                        t.push(l);
                        t
                    })
                })
                .collect();
        }
        out
    };
    let mut words = Vec::new();
    for p in 0..=max_prefix {
        let prefixes = seqs(p);
        for l in 1..=max_loop {
            for cycle in seqs(l) {
                for prefix in &prefixes {
                    words.push(LassoWord::new(prefix.clone(), cycle.clone()));
                }
            }
        }
    }
    words
}

/// Random NNF formula over `atoms` with at most `temporal` temporal
/// operators.
pub fn random_nnf(
    rng: &mut impl Rng,
    atoms: &[ModalAtom],
    temporal: usize,
    depth: usize,
) -> Formula {
    let leaf = |rng: &mut dyn rand::RngCore| {
        let a = Formula::Atom(atoms[rng.gen_range(0..atoms.len())].clone());
        if rng.gen_bool(0.4) {
            Formula::not(a)
        } else {
            a
        }
    };
    if depth == 0 {
        return leaf(rng);
    }
    let choice = if temporal == 0 {
        rng.gen_range(0..3)
    } else {
        rng.gen_range(0..7)
    };
    match choice {
        0 => leaf(rng),
        1 | 2 => {
            let split = rng.gen_range(0..=temporal);
            let a = random_nnf(rng, atoms, split, depth - 1);
            let b = random_nnf(rng, atoms, temporal - split, depth - 1);
            if choice == 1 {
                Formula::and(a, b)
            } else {
                Formula::or(a, b)
            }
        }
        3 | 4 => {
            let split = rng.gen_range(0..temporal);
            let a = random_nnf(rng, atoms, split, depth - 1);
            let b = random_nnf(rng, atoms, temporal - 1 - split, depth - 1);
            if choice == 3 {
                Formula::until(a, b)
            } else {
                Formula::release(a, b)
            }
        }
        5 => Formula::eventually(random_nnf(rng, atoms, temporal - 1, depth - 1)),
        _ => Formula::always(random_nnf(rng, atoms, temporal - 1, depth - 1)),
    }
}

/// Proptest strategy for arbitrary (not necessarily NNF) formulas.
pub fn arb_formula(atoms: Vec<ModalAtom>) -> impl Strategy<Value = Formula> {
    let leaf = proptest::sample::select(atoms).prop_map(Formula::Atom);
    leaf.prop_recursive(5, 32, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(Formula::not),
            inner.clone().prop_map(Formula::eventually),
            inner.clone().prop_map(Formula::always),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::and(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::or(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::implies(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::until(a, b)),
            (inner.clone(), inner).prop_map(|(a, b)| Formula::release(a, b)),
        ]
    })
}

/// Model checking by exhaustive construction of the product graph: the
/// property fails iff some reachable accepting product node lies on a cycle.
/// `None` when the product has more than `limit` nodes.
pub fn brute_force_holds(
    scenario: &Scenario,
    config: &AgentConfig,
    f: &Formula,
    limit: usize,
) -> Option<bool> {
    let atoms = f.atoms();
    let automaton = negated_automaton(f);
    let graph = explore(scenario, config, usize::MAX);
    let valuation: Vec<u64> = graph
        .states
        .iter()
        .map(|s| s.valuation(scenario, &atoms, &config.name).unwrap())
        .collect();

    let mut index: HashMap<(usize, usize), usize> = HashMap::new();
    let mut nodes: Vec<(usize, usize)> = Vec::new();
    let mut queue = VecDeque::new();
    for &q in &automaton.initial {
        if index.insert((0, q), nodes.len()).is_none() {
            nodes.push((0, q));
            queue.push_back((0, q));
        }
    }
    let mut succ: Vec<Vec<usize>> = Vec::new();
    while let Some((s, q)) = queue.pop_front() {
        let mut out = Vec::new();
        for (t, _) in &graph.edges[s] {
            for r in automaton.step(q, valuation[s]) {
                let id = *index.entry((*t, r)).or_insert_with(|| {
                    nodes.push((*t, r));
                    queue.push_back((*t, r));
                    nodes.len() - 1
                });
                out.push(id);
            }
        }
        succ.push(out);
        if nodes.len() > limit {
            return None;
        }
    }

    for (id, &(_, q)) in nodes.iter().enumerate() {
        if !automaton.is_accepting(q) {
            continue;
        }
        let mut seen = HashSet::new();
        let mut stack: Vec<usize> = succ[id].clone();
        while let Some(x) = stack.pop() {
            if x == id {
                return Some(false);
            }
            if seen.insert(x) {
                stack.extend(succ[x].iter().copied());
            }
        }
    }
    Some(true)
}

/// Shortest path length on the grid avoiding `blocked`.
pub fn bfs_distance(
    n: usize,
    from: Coordinate,
    to: Coordinate,
    blocked: &HashSet<Coordinate>,
) -> Option<usize> {
    let mut dist = HashMap::from([(from, 0usize)]);
    let mut queue = VecDeque::from([from]);
    while let Some(c) = queue.pop_front() {
        if c == to {
            return Some(dist[&c]);
        }
        for d in Direction::ALL {
            if let Some(t) = c.step(d, n) {
                if !blocked.contains(&t) && !dist.contains_key(&t) {
                    dist.insert(t, dist[&c] + 1);
                    queue.push_back(t);
                }
            }
        }
    }
    None
}

/// What lies one step away in a direction, from the agent's point of view.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cell {
    Free,
    Obstacle,
    Excluded,
    DeadEnd,
}

pub const CELL_KINDS: [Cell; 4] = [Cell::Free, Cell::Obstacle, Cell::Excluded, Cell::DeadEnd];

/// An agent at `at` heading for `target` whose view of each neighbor is
/// given by `cells` (north, east, south, west).
pub fn agent_with_view(
    at: Coordinate,
    target: Coordinate,
    heading: Option<Axis>,
    cells: [Cell; 4],
) -> AgentState {
    let mut percepts = vec![Percept::At { at }];
    let mut a = AgentState::new(5);
    for (d, cell) in Direction::PRIORITY.into_iter().zip(cells) {
        let Some(next) = at.step(d, 5) else { continue };
        match cell {
            Cell::Free => {}
            Cell::Obstacle => percepts.push(Percept::ObstacleAhead {
                direction: d,
                at: next,
            }),
            Cell::Excluded => {
                a.route_memory.insert(RouteRecord {
                    cell: at,
                    direction: d,
                    destination: target,
                });
            }
            Cell::DeadEnd => {
                a.dead_ends.insert((next, target));
            }
        }
    }
    a = a.update_beliefs(&percepts);
    a.goals.push(Goal::Reach { target });
    a.localized = true;
    a.heading = heading;
    debug_assert!(a.believes(&Belief::At { at }));
    a
}

/// The avoidance cascade written out rule by rule. Returns the direction and
/// the name of the rule that produced it.
pub fn navigation_oracle(
    at: Coordinate,
    compass: &[Direction],
    heading: Option<Axis>,
    cells: [Cell; 4],
) -> Option<(Direction, &'static str)> {
    let order = |d: Direction| Direction::PRIORITY.iter().position(|x| *x == d).unwrap();
    let free = |d: Direction| at.step(d, 5).is_some() && cells[order(d)] == Cell::Free;
    let axis = heading.unwrap_or(Axis::Row);

    // Compass directions on the current axis come first.
    let mut first: Vec<Direction> = compass
        .iter()
        .copied()
        .filter(|d| d.axis() == axis)
        .collect();
    let mut second: Vec<Direction> = compass
        .iter()
        .copied()
        .filter(|d| d.axis() != axis)
        .collect();
    first.sort_by_key(|d| order(*d));
    second.sort_by_key(|d| order(*d));
    let ranked: Vec<Direction> = first.into_iter().chain(second).collect();
    for (i, d) in ranked.iter().enumerate() {
        if free(*d) {
            return Some((*d, if i == 0 { "direct" } else { "detour" }));
        }
    }
    let open: Vec<Direction> = Direction::PRIORITY
        .into_iter()
        .filter(|d| free(*d))
        .collect();
    if open.len() == 1 {
        return Some((open[0], "dead_end"));
    }
    if ranked.len() == 1 {
        let sides = match ranked[0] {
            Direction::North | Direction::South => [Direction::East, Direction::West],
            Direction::East | Direction::West => [Direction::North, Direction::South],
        };
        if let Some(d) = sides.into_iter().find(|d| free(*d)) {
            return Some((d, "sidestep"));
        }
    }
    for d in &ranked {
        let back = match d {
            Direction::North => Direction::South,
            Direction::South => Direction::North,
            Direction::East => Direction::West,
            Direction::West => Direction::East,
        };
        if free(back) {
            return Some((back, "reverse"));
        }
    }
    None
}

//! Property language: LTL over agent modalities.
//!
//! A formula combines modal atoms (`B vehicle at(2,1)`, `G vehicle reach(_,_)`,
//! `P obstacle_ahead(north,_,_)`, ...) with the boolean connectives and the
//! temporal operators always, eventually, until and release.

mod parser;

pub use parser::parse_property;

use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PslError {
    #[error("syntax error at {line}:{column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unknown modality `{name}` at {line}:{column}")]
    UnknownModality {
        name: String,
        line: usize,
        column: usize,
    },
    #[error("predicate `{predicate}` used with arity {found}, earlier with {expected}")]
    ArityMismatch {
        predicate: String,
        expected: usize,
        found: usize,
    },
    #[error("unknown agent `{0}`")]
    UnknownAgent(String),
    #[error("formula mentions {0} distinct atoms; at most 64 are supported")]
    TooManyAtoms(usize),
}

/// A constant argument of a ground atom.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Term {
    Int(i64),
    Sym(String),
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Int(i) => write!(f, "{i}"),
            Term::Sym(s) => f.write_str(s),
        }
    }
}

impl From<usize> for Term {
    fn from(v: usize) -> Self {
        Term::Int(v as i64)
    }
}

impl From<&str> for Term {
    fn from(v: &str) -> Self {
        Term::Sym(v.to_owned())
    }
}

/// A variable-free atom such as `obstacle(1,1,low)`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GroundAtom {
    pub name: String,
    pub args: Vec<Term>,
}

impl GroundAtom {
    pub fn new(name: &str, args: Vec<Term>) -> Self {
        Self {
            name: name.to_owned(),
            args,
        }
    }
}

impl fmt::Display for GroundAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)?;
        write_args(f, &self.args)
    }
}

fn write_args<T: fmt::Display>(f: &mut fmt::Formatter<'_>, args: &[T]) -> fmt::Result {
    if args.is_empty() {
        return Ok(());
    }
    f.write_str("(")?;
    for (i, a) in args.iter().enumerate() {
        if i > 0 {
            f.write_str(",")?;
        }
        write!(f, "{a}")?;
    }
    f.write_str(")")
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ArgPattern {
    Wildcard,
    Const(Term),
}

impl fmt::Display for ArgPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ArgPattern::Wildcard => f.write_str("_"),
            ArgPattern::Const(t) => t.fmt(f),
        }
    }
}

/// An atom whose arguments are constants or `_`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Atom {
    pub predicate: String,
    pub args: Vec<ArgPattern>,
}

impl Atom {
    pub fn matches(&self, ground: &GroundAtom) -> bool {
        self.predicate == ground.name
            && self.args.len() == ground.args.len()
            && self.args.iter().zip(&ground.args).all(|(p, t)| match p {
                ArgPattern::Wildcard => true,
                ArgPattern::Const(c) => c == t,
            })
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.predicate)?;
        write_args(f, &self.args)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Modality {
    /// Belief.
    B,
    /// Goal.
    G,
    /// Last executed action.
    A,
    /// Intention.
    I,
    /// Intention to do: the action the agent is committed to next.
    ID,
    /// Environment percept.
    P,
}

impl Modality {
    pub fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "B" => Modality::B,
            "G" => Modality::G,
            "A" => Modality::A,
            "I" => Modality::I,
            "ID" => Modality::ID,
            "P" => Modality::P,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Modality::B => "B",
            Modality::G => "G",
            Modality::A => "A",
            Modality::I => "I",
            Modality::ID => "ID",
            Modality::P => "P",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ModalAtom {
    pub modality: Modality,
    /// Absent exactly for percepts.
    pub agent: Option<String>,
    pub atom: Atom,
}

impl fmt::Display for ModalAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.modality.name())?;
        if let Some(agent) = &self.agent {
            write!(f, " {agent}")?;
        }
        write!(f, " {}", self.atom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Formula {
    Atom(ModalAtom),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Until(Box<Formula>, Box<Formula>),
    Release(Box<Formula>, Box<Formula>),
    Eventually(Box<Formula>),
    Always(Box<Formula>),
}

impl Formula {
    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Formula {
        Formula::Not(Box::new(f))
    }
    pub fn and(a: Formula, b: Formula) -> Formula {
        Formula::And(Box::new(a), Box::new(b))
    }
    pub fn or(a: Formula, b: Formula) -> Formula {
        Formula::Or(Box::new(a), Box::new(b))
    }
    pub fn implies(a: Formula, b: Formula) -> Formula {
        Formula::Implies(Box::new(a), Box::new(b))
    }
    pub fn until(a: Formula, b: Formula) -> Formula {
        Formula::Until(Box::new(a), Box::new(b))
    }
    pub fn release(a: Formula, b: Formula) -> Formula {
        Formula::Release(Box::new(a), Box::new(b))
    }
    pub fn eventually(a: Formula) -> Formula {
        Formula::Eventually(Box::new(a))
    }
    pub fn always(a: Formula) -> Formula {
        Formula::Always(Box::new(a))
    }

    /// Height of the tree; a lone atom has depth 1.
    pub fn depth(&self) -> usize {
        match self {
            Formula::Atom(_) => 1,
            Formula::Not(a) | Formula::Eventually(a) | Formula::Always(a) => 1 + a.depth(),
            Formula::And(a, b)
            | Formula::Or(a, b)
            | Formula::Implies(a, b)
            | Formula::Until(a, b)
            | Formula::Release(a, b) => 1 + a.depth().max(b.depth()),
        }
    }

    /// Distinct modal atoms in order of first appearance.
    pub fn atoms(&self) -> Vec<ModalAtom> {
        let mut out = Vec::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms(&self, out: &mut Vec<ModalAtom>) {
        match self {
            Formula::Atom(m) => {
                if !out.contains(m) {
                    out.push(m.clone());
                }
            }
            Formula::Not(a) | Formula::Eventually(a) | Formula::Always(a) => a.collect_atoms(out),
            Formula::And(a, b)
            | Formula::Or(a, b)
            | Formula::Implies(a, b)
            | Formula::Until(a, b)
            | Formula::Release(a, b) => {
                a.collect_atoms(out);
                b.collect_atoms(out);
            }
        }
    }

    /// True when negation occurs only directly above atoms and no
    /// implication is left.
    pub fn is_nnf(&self) -> bool {
        match self {
            Formula::Atom(_) => true,
            Formula::Not(a) => matches!(**a, Formula::Atom(_)),
            Formula::Implies(..) => false,
            Formula::Eventually(a) | Formula::Always(a) => a.is_nnf(),
            Formula::And(a, b)
            | Formula::Or(a, b)
            | Formula::Until(a, b)
            | Formula::Release(a, b) => a.is_nnf() && b.is_nnf(),
        }
    }

    pub fn count_temporal(&self) -> usize {
        match self {
            Formula::Atom(_) => 0,
            Formula::Not(a) => a.count_temporal(),
            Formula::Eventually(a) | Formula::Always(a) => 1 + a.count_temporal(),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => {
                a.count_temporal() + b.count_temporal()
            }
            Formula::Until(a, b) | Formula::Release(a, b) => {
                1 + a.count_temporal() + b.count_temporal()
            }
        }
    }
}

/// Pushes negations down to the atoms and removes implications.
pub fn to_nnf(f: &Formula) -> Formula {
    nnf(f, false)
}

fn nnf(f: &Formula, negated: bool) -> Formula {
    use Formula as F;
    match (f, negated) {
        (F::Atom(_), false) => f.clone(),
        (F::Atom(_), true) => F::not(f.clone()),
        (F::Not(a), neg) => nnf(a, !neg),
        (F::And(a, b), false) => F::and(nnf(a, false), nnf(b, false)),
        (F::And(a, b), true) => F::or(nnf(a, true), nnf(b, true)),
        (F::Or(a, b), false) => F::or(nnf(a, false), nnf(b, false)),
        (F::Or(a, b), true) => F::and(nnf(a, true), nnf(b, true)),
        (F::Implies(a, b), false) => F::or(nnf(a, true), nnf(b, false)),
        (F::Implies(a, b), true) => F::and(nnf(a, false), nnf(b, true)),
        (F::Until(a, b), false) => F::until(nnf(a, false), nnf(b, false)),
        (F::Until(a, b), true) => F::release(nnf(a, true), nnf(b, true)),
        (F::Release(a, b), false) => F::release(nnf(a, false), nnf(b, false)),
        (F::Release(a, b), true) => F::until(nnf(a, true), nnf(b, true)),
        (F::Eventually(a), false) => F::eventually(nnf(a, false)),
        (F::Eventually(a), true) => F::always(nnf(a, true)),
        (F::Always(a), false) => F::always(nnf(a, false)),
        (F::Always(a), true) => F::eventually(nnf(a, true)),
    }
}

impl fmt::Display for Formula {
    /// Canonical single-line form; every binary operator is parenthesised.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::Atom(m) => m.fmt(f),
            Formula::Not(a) => write!(f, "~ {a}"),
            Formula::Eventually(a) => write!(f, "<> {a}"),
            Formula::Always(a) => write!(f, "[] {a}"),
            Formula::And(a, b) => write!(f, "({a} & {b})"),
            Formula::Or(a, b) => write!(f, "({a} | {b})"),
            Formula::Implies(a, b) => write!(f, "({a} -> {b})"),
            Formula::Until(a, b) => write!(f, "({a} U {b})"),
            Formula::Release(a, b) => write!(f, "({a} R {b})"),
        }
    }
}

/// The agent-side facts a modal atom is evaluated against.
#[derive(Debug, Clone, Copy)]
pub struct Observation<'a> {
    pub agent: &'a str,
    pub beliefs: &'a [GroundAtom],
    pub goals: &'a [GroundAtom],
    pub last_action: Option<&'a GroundAtom>,
    pub intentions: &'a [GroundAtom],
    pub committed_action: Option<&'a GroundAtom>,
    pub percepts: &'a [GroundAtom],
}

pub fn eval_modal_atom(m: &ModalAtom, obs: &Observation<'_>) -> Result<bool, PslError> {
    if let Some(agent) = &m.agent {
        if agent != obs.agent {
            return Err(PslError::UnknownAgent(agent.clone()));
        }
    }
    let any = |facts: &[GroundAtom]| facts.iter().any(|g| m.atom.matches(g));
    Ok(match m.modality {
        Modality::B => any(obs.beliefs),
        Modality::G => any(obs.goals),
        Modality::A => obs.last_action.is_some_and(|a| m.atom.matches(a)),
        Modality::I => any(obs.intentions),
        Modality::ID => obs.committed_action.is_some_and(|a| m.atom.matches(a)),
        Modality::P => any(obs.percepts),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn obs<'a>(beliefs: &'a [GroundAtom], goals: &'a [GroundAtom]) -> Observation<'a> {
        Observation {
            agent: "vehicle",
            beliefs,
            goals,
            last_action: None,
            intentions: &[],
            committed_action: None,
            percepts: &[],
        }
    }

    fn modal(text: &str) -> ModalAtom {
        match parse_property(text).unwrap() {
            Formula::Atom(m) => m,
            other => panic!("not an atom: {other}"),
        }
    }

    #[test]
    fn belief_pattern_match() {
        let beliefs = [GroundAtom::new(
            "obstacle",
            vec![1.into(), 1.into(), "low".into()],
        )];
        assert!(
            eval_modal_atom(&modal("B vehicle obstacle(_,_,low)"), &obs(&beliefs, &[])).unwrap()
        );
        assert!(
            !eval_modal_atom(&modal("B vehicle obstacle(_,_,high)"), &obs(&beliefs, &[])).unwrap()
        );
        assert!(!eval_modal_atom(&modal("B vehicle obstacle(_,_)"), &obs(&beliefs, &[])).unwrap());
    }

    #[test]
    fn goal_pattern_match() {
        let goals = [GroundAtom::new(
            "colide_obstacle",
            vec!["south".into(), "low".into()],
        )];
        assert!(eval_modal_atom(
            &modal("G vehicle colide_obstacle(_, low)"),
            &obs(&[], &goals)
        )
        .unwrap());
    }

    #[test]
    fn empty_base_is_false() {
        assert!(!eval_modal_atom(&modal("B vehicle at(0,0)"), &obs(&[], &[])).unwrap());
    }

    #[test]
    fn wrong_agent_is_an_error() {
        assert_eq!(
            eval_modal_atom(&modal("B truck at(0,0)"), &obs(&[], &[])),
            Err(PslError::UnknownAgent("truck".into()))
        );
    }

    #[test]
    fn other_modalities() {
        let act = GroundAtom::new("drive", vec!["north".into()]);
        let percepts = [GroundAtom::new("at", vec![2.into(), 1.into()])];
        let o = Observation {
            agent: "vehicle",
            beliefs: &[],
            goals: &[],
            last_action: Some(&act),
            intentions: std::slice::from_ref(&act),
            committed_action: Some(&act),
            percepts: &percepts,
        };
        for text in [
            "A vehicle drive(north)",
            "I vehicle drive(_)",
            "ID vehicle drive(north)",
            "P at(2,1)",
        ] {
            assert!(eval_modal_atom(&modal(text), &o).unwrap(), "{text}");
        }
        assert!(!eval_modal_atom(&modal("A vehicle drive(south)"), &o).unwrap());
    }

    #[test]
    fn wildcard_pattern_is_true_iff_predicate_present() {
        let beliefs = [GroundAtom::new("at", vec![3.into(), 4.into()])];
        let m = modal("B vehicle at(_,_)");
        assert!(eval_modal_atom(&m, &obs(&beliefs, &[])).unwrap());
        let other = [GroundAtom::new("parked", vec![3.into(), 4.into()])];
        assert!(!eval_modal_atom(&m, &obs(&other, &[])).unwrap());
    }

    #[test]
    fn nnf_dualities() {
        let p = |s| parse_property(s).unwrap();
        assert_eq!(to_nnf(&p("~ (B a x U B a y)")), p("(~ B a x) R (~ B a y)"));
        assert_eq!(to_nnf(&p("~ ~ B a x")), p("B a x"));
        assert_eq!(to_nnf(&p("~ [] B a x")), p("<> ~ B a x"));
        assert_eq!(to_nnf(&p("~ <> B a x")), p("[] ~ B a x"));
        assert_eq!(to_nnf(&p("B a x -> B a y")), p("~ B a x | B a y"));
        assert_eq!(to_nnf(&p("~ (B a x R B a y)")), p("~ B a x U ~ B a y"));
        assert!(to_nnf(&p("~ (B a x -> [] (B a y & ~ <> B a x))")).is_nnf());
    }
}

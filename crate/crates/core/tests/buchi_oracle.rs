mod common;

use avmc::buchi::{accepts_lasso, degeneralize, translate, translate_over, LassoWord};
use avmc::psl::{parse_property, to_nnf, Formula};
use common::*;

fn words() -> Vec<LassoWord> {
    all_lasso_words(2, 3, 2)
}

fn check(text: &str) {
    let f = parse_property(text).unwrap();
    let atoms = vec![modal("B v p"), modal("B v q")];
    let g = translate_over(&to_nnf(&f), &atoms);
    let d = degeneralize(&g);
    for w in words() {
        let expected = semantic_eval(&f, &atoms, &w);
        assert_eq!(
            accepts_lasso(&g, &w),
            expected,
            "{text} generalized on {w:?}"
        );
        assert_eq!(
            accepts_lasso(&d, &w),
            expected,
            "{text} degeneralized on {w:?}"
        );
    }
}

#[test]
fn textbook_formulas() {
    for text in [
        "B v p",
        "~ B v p",
        "B v p U B v q",
        "B v p R B v q",
        "<> B v p",
        "[] B v p",
        "[] <> B v p",
        "<> [] B v p",
        "[] <> B v p & [] <> B v q",
        "[] (B v p -> <> B v q)",
        "(B v p U B v q) | [] ~ B v q",
        "<> (B v p & [] ~ B v q)",
        "B v p & ~ B v p",
        "B v p | ~ B v p",
    ] {
        check(text);
    }
}

#[test]
fn degeneralized_has_one_acceptance_set() {
    let f = parse_property("[] <> B v p & [] <> B v q").unwrap();
    let g = translate(&to_nnf(&f));
    assert_eq!(g.accepting.len(), 2);
    let d = degeneralize(&g);
    assert!(d.accepting.len() <= 1);
}

#[test]
fn always_eventually_rejects_finite_p() {
    let f = parse_property("[] <> B v p").unwrap();
    let a = degeneralize(&translate(&to_nnf(&f)));
    assert!(accepts_lasso(&a, &LassoWord::new(vec![0, 0], vec![1, 0])));
    assert!(!accepts_lasso(&a, &LassoWord::new(vec![1, 1], vec![0])));
}

#[test]
fn negation_splits_the_word_space() {
    let atoms = vec![modal("B v p"), modal("B v q")];
    let f = parse_property("[] (B v p -> <> B v q)").unwrap();
    let pos = degeneralize(&translate_over(&to_nnf(&f), &atoms));
    let neg = degeneralize(&translate_over(&to_nnf(&Formula::not(f)), &atoms));
    for w in words() {
        assert_ne!(accepts_lasso(&pos, &w), accepts_lasso(&neg, &w), "{w:?}");
    }
}

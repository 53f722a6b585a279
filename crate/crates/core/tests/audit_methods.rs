//! The affine audit method agrees with exhaustive enumeration where it
//! applies, and refuses views that are not affine in the coins.

use std::collections::BTreeSet;

use num_rational::Ratio;

use compc::audit::{affine_tv, affine_view, enumerate_views, tv_distance, AuditError};
use compc::coins::{Actor, Coins};
use compc::net::{Endpoint, Record};
use compc::scenario::{run_scenario_with, Scenario};

fn scenario(m: usize, program: &str, inputs: &str, observer: usize) -> Scenario {
    let text = format!(
        "[params]\nn=4\nt=1\nm={m}\nprime=5\nprotocol=semi-honest\nsub_threshold=true\n\
         [adversaries]\n{observer}=SemiHonest\n[inputs]\n{inputs}\n[program]\n{program}"
    );
    Scenario::parse(&text).expect("valid scenario")
}

fn runner(s: Scenario, leaky: bool) -> impl Fn(Box<dyn Coins>) -> Vec<Record> + Sync {
    move |coins| run_scenario_with(&s, coins, leaky).records
}

fn compare(m: usize, leaky: bool) {
    for w in 1..=4 {
        let a = scenario(m, "SHARE A direct -> a", "A = 1 2", w);
        let b = scenario(m, "SHARE A direct -> a", "A = 4 0", w);
        let field = a.field();
        let fixed: BTreeSet<Actor> = [Actor::Worker(w)].into();
        let obs = [Endpoint::Worker(w)];
        let (ra, rb) = (runner(a, leaky), runner(b, leaky));
        let exact = tv_distance(
            &enumerate_views(&ra, field, &fixed, &obs).unwrap(),
            &enumerate_views(&rb, field, &fixed, &obs).unwrap(),
        );
        let va = affine_view(&ra, field, &fixed, &obs, 8, 1).unwrap();
        let vb = affine_view(&rb, field, &fixed, &obs, 8, 2).unwrap();
        assert_eq!(affine_tv(&va, &vb), exact, "m={m} leaky={leaky} w{w}");
        let expect = if leaky {
            Ratio::from_integer(1)
        } else {
            Ratio::from_integer(0)
        };
        assert_eq!(exact, expect, "m={m} leaky={leaky} w{w}");
    }
}

#[test]
fn affine_matches_enumeration_for_sharing() {
    compare(1, false);
    compare(2, false);
}

#[test]
fn affine_matches_enumeration_for_planted_leak() {
    compare(1, true);
}

#[test]
fn multiplication_views_are_not_affine() {
    let text = "[params]\nn=3\nt=1\nm=1\nprime=5\nprotocol=semi-honest\nsub_threshold=true\n\
                [adversaries]\n1=SemiHonest\n[inputs]\nA = 1\nB = 2\n[program]\n\
                SHARE A direct -> a\nSHARE B reverse -> b\nMUL a b -> c\nREVEAL c";
    let s = Scenario::parse(text).unwrap();
    let field = s.field();
    let fixed: BTreeSet<Actor> = [Actor::Worker(1)].into();
    let err = affine_view(
        &runner(s, false),
        field,
        &fixed,
        &[Endpoint::Worker(1)],
        16,
        0,
    )
    .unwrap_err();
    assert!(matches!(err, AuditError::NotAffine), "{err}");
}

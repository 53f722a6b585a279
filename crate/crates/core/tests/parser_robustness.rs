//! Stable-toolchain companion to the fuzz targets: mutated inputs must be
//! rejected with an error, never a panic.

use proptest::prelude::*;

use compc::audit::parse_grid;
use compc::gf::Field;
use compc::net::{parse_transcript, RawRecord};
use compc::scenario::{run_scenario, Protocol, Scenario};

const SEED_SCENARIO: &str = "[params]\nn = 6\nt = 1\nm = 2\nprime = 2147483647\nseed = 7\nz = 4\n\
protocol = malicious\n\n[adversaries]\n6 = CorruptProductPoly\n\n[inputs]\nA = random\n\
B = 1 2 3 4; 5 6 7 8; 1 1 1 1; 0 0 0 1\n\n[program]\nSHARE A direct -> a\nSHARE B reverse -> b\n\
MUL a b -> c\nTRANSPOSE c -> d\nD2R a -> r\nR2D r -> q\nADD a q -> e\nREVEAL d\nREVEAL e\n";

fn seed_transcript() -> String {
    let s = Scenario::standard(3, 1, 1, 11, 5, Protocol::SemiHonest);
    run_scenario(&s).to_lines()
}

#[derive(Clone, Debug)]
enum Edit {
    Insert(usize, char),
    Delete(usize),
    Replace(usize, char),
    Digits(usize, u64),
}

fn edits() -> impl Strategy<Value = Vec<Edit>> {
    let ch = prop::sample::select(vec![
        '0', '9', '=', ';', ',', '.', '-', '>', '[', ']', '\n', ' ', '"', '{', '}', ':', 'x',
    ]);
    prop::collection::vec(
        prop_oneof![
            (any::<usize>(), ch.clone()).prop_map(|(i, c)| Edit::Insert(i, c)),
            any::<usize>().prop_map(Edit::Delete),
            (any::<usize>(), ch).prop_map(|(i, c)| Edit::Replace(i, c)),
            (any::<usize>(), any::<u64>()).prop_map(|(i, v)| Edit::Digits(i, v)),
        ],
        1..6,
    )
}

fn mutate(text: &str, edits: &[Edit]) -> String {
    let mut chars: Vec<char> = text.chars().collect();
    for e in edits {
        let len = chars.len().max(1);
        match *e {
            Edit::Insert(i, c) => chars.insert(i % (chars.len() + 1), c),
            Edit::Delete(i) if !chars.is_empty() => {
                chars.remove(i % len);
            }
            Edit::Replace(i, c) if !chars.is_empty() => chars[i % len] = c,
            Edit::Digits(i, v) => {
                let at = i % (chars.len() + 1);
                chars.splice(at..at, v.to_string().chars());
            }
            _ => {}
        }
    }
    chars.into_iter().collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn scenario_parser_survives_mutation(e in edits()) {
        let text = mutate(SEED_SCENARIO, &e);
        if let Ok(s) = Scenario::parse(&text) {
            prop_assert_eq!(Scenario::parse(&s.to_text()).unwrap(), s);
        }
    }

    #[test]
    fn scenario_parser_survives_noise(text in "\\PC{0,200}") {
        let _ = Scenario::parse(&text);
    }

    #[test]
    fn grid_parser_survives_noise(text in "[a-z=;,.0-9 -]{0,40}") {
        let _ = parse_grid(&text);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn transcript_parser_survives_mutation(e in edits()) {
        let text = mutate(&seed_transcript(), &e);
        let _ = parse_transcript(&text);
        let field = Field::new(11).unwrap();
        for line in text.lines() {
            if let Ok(raw) = RawRecord::parse(line) {
                if let Ok(rec) = raw.to_record(field) {
                    prop_assert_eq!(RawRecord::from(&rec), raw);
                }
            }
        }
    }
}

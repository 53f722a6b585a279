use std::time::Instant;

use compc::adversary::Strategy;
use compc::gf::Field;
use compc::mpc::recovery_threshold;
use compc::scenario::{run_scenario, Protocol, Scenario};

fn cell(m: usize, t: usize, strategy: Strategy, seed: u64) -> Scenario {
    let n = recovery_threshold(m, t);
    let mut s = Scenario::standard(n, t, m, Field::DEFAULT_PRIME, seed, Protocol::Malicious);
    s.z = 4;
    s.adversaries = (n - t + 1..=n).map(|p| (p, strategy)).collect();
    s.validate().unwrap();
    s
}

#[test]
fn every_strategy_is_tolerated_at_threshold() {
    let start = Instant::now();
    let mut runs = 0;
    for (m, t) in [(1, 1), (1, 2), (2, 1), (2, 2)] {
        for strategy in Strategy::MALICIOUS {
            for seed in 0..20 {
                let s = cell(m, t, strategy, seed);
                let tr = run_scenario(&s);
                let out = tr
                    .outcome
                    .as_ref()
                    .unwrap_or_else(|e| panic!("m={m} t={t} {strategy} seed={seed}: {e}"));
                assert_eq!(
                    out,
                    &s.expected().unwrap(),
                    "m={m} t={t} {strategy} seed={seed}"
                );
                for (p, r) in tr.eliminations() {
                    assert!(
                        s.adversaries.contains_key(&p),
                        "honest {p} eliminated ({r}) m={m} t={t} {strategy} seed={seed}"
                    );
                }
                runs += 1;
            }
        }
    }
    eprintln!("{runs} runs in {:?}", start.elapsed());
}

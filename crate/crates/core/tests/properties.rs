//! Property tests for the algebra layers, the decoder, sharing and the wire
//! format, checked against schoolbook arithmetic.

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use compc::coins::Randomness;
use compc::gf::{FMatrix, Field};
use compc::net::parse_transcript;
use compc::poly::{interpolate, MatPoly};
use compc::rscode::{decode, max_errors};
use compc::scenario::{run_scenario, Protocol, Scenario};
use compc::sharing::{
    issue_shares, make_share_poly, reconstruct, robust_reconstruct, Direction, ShareLabel,
};

const PRIMES: [u64; 4] = [5, 11, 65_537, Field::DEFAULT_PRIME];

fn field() -> impl Strategy<Value = Field> {
    prop::sample::select(PRIMES.to_vec()).prop_map(|p| Field::new(p).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn scalar_ops_match_u128(f in field(), a in any::<u64>(), b in any::<u64>()) {
        let p = f.modulus();
        let (x, y) = (a % p, b % p);
        prop_assert_eq!(f.add(x, y) as u128, (x as u128 + y as u128) % p as u128);
        prop_assert_eq!(f.mul(x, y) as u128, x as u128 * y as u128 % p as u128);
        prop_assert_eq!(f.add(f.sub(x, y), y), x);
        if y != 0 {
            prop_assert_eq!(f.mul(f.inv(y).unwrap(), y), 1);
            prop_assert_eq!(f.mul(f.div(x, y).unwrap(), y), x);
        } else {
            prop_assert!(f.inv(y).is_err());
        }
    }

    #[test]
    fn matrix_product_is_schoolbook(f in field(), seed in any::<u64>(), r in 1usize..5, k in 1usize..5, c in 1usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = rng.matrix(f, r, k);
        let b = rng.matrix(f, k, c);
        let prod = a.mul(&b).unwrap();
        let p = f.modulus() as u128;
        for i in 0..r {
            for j in 0..c {
                let want = (0..k).map(|l| a.get(i, l) as u128 * b.get(l, j) as u128 % p).sum::<u128>() % p;
                prop_assert_eq!(prod.get(i, j) as u128, want);
            }
        }
        prop_assert_eq!(a.mul(&b).unwrap().transpose(), b.transpose().mul(&a.transpose()).unwrap());
    }

    #[test]
    fn interpolation_inverts_evaluation(seed in any::<u64>(), deg in 0usize..6) {
        let f = Field::new(Field::DEFAULT_PRIME).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let q = MatPoly::from_coeffs((0..=deg).map(|_| rng.matrix(f, 2, 3)).collect());
        let pts: Vec<u64> = (1..=deg as u64 + 1).collect();
        let vals: Vec<FMatrix> = pts.iter().map(|&x| q.eval(x)).collect();
        let back = interpolate(f, &pts, &vals).unwrap();
        prop_assert_eq!(back.degree(), q.degree());
        for i in 0..=deg {
            prop_assert_eq!(back.coeff(i), q.coeff(i));
        }
    }

    #[test]
    fn product_evaluates_pointwise(seed in any::<u64>(), da in 0usize..4, db in 0usize..4, x in 0u64..1000) {
        let f = Field::new(65_537).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = MatPoly::from_coeffs((0..=da).map(|_| rng.matrix(f, 2, 3)).collect());
        let b = MatPoly::from_coeffs((0..=db).map(|_| rng.matrix(f, 3, 2)).collect());
        let ab = a.mul(&b).unwrap();
        prop_assert_eq!(ab.eval(x), a.eval(x).mul(&b.eval(x)).unwrap());
    }

    #[test]
    fn decoder_corrects_up_to_bound(seed in any::<u64>(), n in 3usize..12, deg in 0usize..3, pick in any::<u64>()) {
        prop_assume!(n > deg);
        let f = Field::new(Field::DEFAULT_PRIME).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let q = MatPoly::from_coeffs((0..=deg).map(|_| rng.matrix(f, 2, 2)).collect());
        let alphas: Vec<u64> = (1..=n as u64).collect();
        let mut word: Vec<FMatrix> = alphas.iter().map(|&x| q.eval(x)).collect();
        let e = max_errors(n, deg);
        let mut corrupted = std::collections::BTreeSet::new();
        for i in 0..e {
            let pos = ((pick >> (4 * i)) as usize) % n;
            if corrupted.insert(pos) {
                let noise = rng.matrix(f, 2, 2);
                word[pos] = word[pos].add(&noise).unwrap();
                if noise.is_zero() {
                    corrupted.remove(&pos);
                }
            }
        }
        let d = decode(f, deg, &alphas, &word, e).unwrap();
        prop_assert_eq!(d.poly.coeffs(), q.coeffs());
        prop_assert_eq!(d.errors, corrupted);
    }

    #[test]
    fn sharing_round_trips(seed in any::<u64>(), m in 1usize..4, t in 0usize..3, delta in 0usize..2, rev in any::<bool>()) {
        let f = Field::new(Field::DEFAULT_PRIME).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = rng.matrix(f, 2, 2 * m);
        let dir = if rev { Direction::Reverse } else { Direction::Direct };
        let label = ShareLabel::new(m, t, delta, dir);
        let poly = make_share_poly(&x, label, &mut rng).unwrap();
        let n = label.threshold() + 2 * t;
        let mut shares = issue_shares(&poly, label, n);
        prop_assert_eq!(reconstruct(&shares[..label.threshold()], label).unwrap(), x.clone());
        if t > 0 {
            shares[0].value = shares[0].value.add(&FMatrix::from_fn(f, 2, 2, |_, _| 1)).unwrap();
            let (got, bad) = robust_reconstruct(&shares, label, t).unwrap();
            prop_assert_eq!(got, x);
            prop_assert_eq!(bad.into_iter().collect::<Vec<_>>(), vec![1]);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn transcripts_round_trip(seed in any::<u64>(), m in 1usize..3) {
        let s = Scenario::standard(2 * m + 2, 1, m, Field::DEFAULT_PRIME, seed, Protocol::SemiHonest);
        let tr = run_scenario(&s);
        let text = tr.to_lines();
        prop_assert_eq!(parse_transcript(&text).unwrap(), tr.records);
    }

    #[test]
    fn scenario_text_round_trips(seed in any::<u64>(), t in 1usize..3, m in 1usize..3) {
        let n = 3 * t + 2 * m - 1;
        let mut s = Scenario::standard(n, t, m, Field::DEFAULT_PRIME, seed, Protocol::Malicious);
        s.adversaries.insert(n, compc::adversary::Strategy::ALL[seed as usize % 8]);
        prop_assert_eq!(Scenario::parse(&s.to_text()).unwrap(), s);
    }
}

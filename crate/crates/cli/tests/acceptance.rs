//! Acceptance suite: one PASS/FAIL line per criterion. Runs without the
//! libtest harness so the lines always reach the output.

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use compc::adversary::Strategy;
use compc::audit::run_case;
use compc::coins::{Randomness, SeededCoins};
use compc::evss::{run_evss_batch, EvssJob};
use compc::gf::{Axis, FMatrix, Field};
use compc::mpc::{build_masks, product_poly, recovery_threshold};
use compc::net::{parse_transcript, NetParams, Network, RawRecord, Record};
use compc::poly::{extraction_weights, MatPoly};
use compc::rscode::{decode, max_errors, RsError};
use compc::scenario::{run_scenario, Protocol, Scenario};
use compc::sharing::{make_share_poly, Direction, PartyId, ShareLabel};
use compc::subroutines::{subshare_poly, Reason};
use compc_cli::{cmd_run, cmd_sweep, GridArgs, RunArgs};
use serde_json::Value;

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

// ---------------------------------------------------------------------------
// Independent oracles

fn entry(m: &FMatrix, r: usize, c: usize) -> u128 {
    m.data()[r * m.cols() + c] as u128
}

/// `a · bᵀ` by schoolbook arithmetic in u128.
fn naive_abt(a: &FMatrix, b: &FMatrix) -> Vec<Vec<u64>> {
    let p = a.field().modulus() as u128;
    (0..a.rows())
        .map(|i| {
            (0..b.rows())
                .map(|j| {
                    ((0..a.cols())
                        .map(|k| entry(a, i, k) * entry(b, j, k) % p)
                        .sum::<u128>()
                        % p) as u64
                })
                .collect()
        })
        .collect()
}

fn rows_of(m: &FMatrix) -> Vec<Vec<u64>> {
    (0..m.rows()).map(|r| m.row(r).to_vec()).collect()
}

fn naive_transpose(m: &FMatrix) -> Vec<Vec<u64>> {
    (0..m.cols())
        .map(|c| (0..m.rows()).map(|r| m.data()[r * m.cols() + c]).collect())
        .collect()
}

fn pow_mod(b: u128, mut e: u128, p: u128) -> u128 {
    let (mut acc, mut b) = (1u128, b % p);
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * b % p;
        }
        b = b * b % p;
        e >>= 1;
    }
    acc
}

/// Horner evaluation of a scalar polynomial with coefficients `cs`.
fn horner(cs: &[u128], x: u128, p: u128) -> u128 {
    cs.iter().rev().fold(0, |acc, &c| (acc * x + c) % p)
}

/// Entry-wise Lagrange interpolation through `pts` evaluated at `x`.
fn lagrange_at(pts: &[(u128, &FMatrix)], x: u128, p: u128) -> Vec<u128> {
    let len = pts[0].1.data().len();
    let mut out = vec![0u128; len];
    for (i, &(xi, vi)) in pts.iter().enumerate() {
        let (mut num, mut den) = (1u128, 1u128);
        for (j, &(xj, _)) in pts.iter().enumerate() {
            if i != j {
                num = num * ((x + p - xj) % p) % p;
                den = den * ((xi + p - xj) % p) % p;
            }
        }
        let w = num * pow_mod(den, p - 2, p) % p;
        for (o, &v) in out.iter_mut().zip(vi.data()) {
            *o = (*o + w * v as u128) % p;
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Shared bookkeeping

#[derive(Default)]
struct Ledger {
    honest_eliminations: Vec<String>,
}

impl Ledger {
    fn note_run(&mut self, what: &str, s: &BTreeMap<PartyId, Strategy>, records: &[Record]) {
        for r in records {
            if let Record::Elimination {
                party,
                reason,
                phase,
            } = r
            {
                if !s.contains_key(party) {
                    self.honest_eliminations
                        .push(format!("{what}: party {party} ({reason} in {phase})"));
                }
            }
        }
    }
}

fn malicious(n: usize, t: usize, m: usize, seed: u64, strategy: Option<Strategy>) -> Scenario {
    let mut s = Scenario::standard(n, t, m, Field::DEFAULT_PRIME, seed, Protocol::Malicious);
    s.z = 4;
    if let Some(st) = strategy {
        s.adversaries = (n - t + 1..=n).map(|p| (p, st)).collect();
    }
    s
}

// ---------------------------------------------------------------------------
// Criteria

fn c1_threshold() -> Outcome {
    check(recovery_threshold(20, 20) == 99, || {
        format!("formula gave {}", recovery_threshold(20, 20))
    })?;
    let args = GridArgs {
        grid: Some("m=20;t=20;strategy=all".into()),
        ..Default::default()
    };
    let mut buf = Vec::new();
    let code = cmd_sweep(&args, &mut buf);
    check(code == 0, || format!("sweep exited {code}"))?;
    let text = String::from_utf8(buf).map_err(|e| e.to_string())?;
    let rows: Vec<Value> = text
        .lines()
        .map(serde_json::from_str)
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    check(
        !rows.is_empty() && rows.iter().all(|r| r["n"] == 99 && r["formula"] == 99),
        || format!("sweep rows: {text}"),
    )?;
    Ok(format!("N(20,20) = 99 in {} sweep rows", rows.len()))
}

fn c2_malicious(ledger: &mut Ledger) -> Outcome {
    let mut runs = 0;
    for (m, t) in [(1, 1), (1, 2), (2, 1), (2, 2)] {
        let n = 3 * t + 2 * m - 1;
        for strategy in Strategy::MALICIOUS {
            for seed in 0..20 {
                let s = malicious(n, t, m, seed, Some(strategy));
                s.validate().map_err(|e| e.to_string())?;
                let inputs = s.input_matrices();
                let want = naive_abt(&inputs[0].1, &inputs[1].1);
                let tr = run_scenario(&s);
                ledger.note_run("criterion 2", &s.adversaries, &tr.records);
                let out = tr
                    .outcome
                    .map_err(|e| format!("m={m} t={t} {strategy} seed {seed}: abort {e}"))?;
                check(rows_of(&out[0].1) == want, || {
                    format!("m={m} t={t} {strategy} seed {seed}: wrong product")
                })?;
                runs += 1;
            }
        }
    }
    Ok(format!("{runs}/560 runs exact"))
}

fn c3_evss() -> Outcome {
    let field = Field::new(Field::DEFAULT_PRIME).expect("prime");
    let p = field.modulus() as u128;
    let mut stats = BTreeMap::new();
    for (m, t) in [(1, 1), (2, 1), (1, 2)] {
        let n = 3 * t + m + 1;
        let deg = m + t - 1;
        for cheat in [false, true] {
            for seed in 0..200u64 {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let q = MatPoly::from_coeffs((0..=deg).map(|_| rng.matrix(field, 2, 2)).collect());
                let adv: BTreeMap<PartyId, Strategy> = if cheat {
                    BTreeMap::from([(1, Strategy::InconsistentEvssDealer)])
                } else {
                    BTreeMap::new()
                };
                let mut net = Network::new(
                    NetParams { field, n, t, m },
                    adv.clone(),
                    Box::new(SeededCoins::new(seed)),
                    seed,
                );
                let job = EvssJob {
                    tag: "x".into(),
                    dealer: 1,
                    poly: q.clone(),
                    degree: deg,
                };
                let out = run_evss_batch(&mut net, vec![job])
                    .map_err(|e| e.to_string())?
                    .remove(0);
                let (accepted, unanimous) = net
                    .records()
                    .iter()
                    .find_map(|r| match r {
                        Record::Verdict {
                            accepted,
                            unanimous,
                            ..
                        } => Some((*accepted, *unanimous)),
                        _ => None,
                    })
                    .ok_or("no verdict recorded")?;
                let honest: Vec<PartyId> = (1..=n).filter(|p| !adv.contains_key(p)).collect();
                let ctx = || format!("m={m} t={t} cheat={cheat} seed {seed}");
                check(unanimous, || format!("{}: honest parties disagree", ctx()))?;
                if !cheat {
                    check(accepted, || format!("{}: honest dealer rejected", ctx()))?;
                    let coeffs: Vec<&FMatrix> = q.coeffs().iter().collect();
                    for &h in &honest {
                        let share = out
                            .shares
                            .get(&h)
                            .ok_or_else(|| format!("{}: missing share of {h}", ctx()))?;
                        let x = h as u128;
                        for (i, &v) in share.data().iter().enumerate() {
                            let cs: Vec<u128> =
                                coeffs.iter().map(|c| c.data()[i] as u128).collect();
                            check(horner(&cs, x, p) == v as u128, || {
                                format!("{}: share of {h} off the dealt polynomial", ctx())
                            })?;
                        }
                    }
                    *stats.entry("honest-accept").or_insert(0) += 1;
                } else if accepted {
                    let pts: Vec<(u128, &FMatrix)> = honest
                        .iter()
                        .map(|&h| {
                            out.shares
                                .get(&h)
                                .map(|s| (h as u128, s))
                                .ok_or_else(|| format!("{}: missing share", ctx()))
                        })
                        .collect::<Result<_, _>>()?;
                    let (base, rest) = pts.split_at(deg + 1);
                    for &(x, v) in rest {
                        let want = lagrange_at(base, x, p);
                        check(
                            v.data().iter().zip(&want).all(|(&a, &b)| a as u128 == b),
                            || {
                                format!(
                                    "{}: accepted shares are not on one degree-{deg} polynomial",
                                    ctx()
                                )
                            },
                        )?;
                    }
                    *stats.entry("cheat-accept-consistent").or_insert(0) += 1;
                } else {
                    *stats.entry("cheat-reject").or_insert(0) += 1;
                }
            }
        }
    }
    Ok(format!("{stats:?}"))
}

fn c4_decoder() -> Outcome {
    let field = Field::new(11).expect("prime");
    let p = 11u128;
    let scalar = |v: u128| FMatrix::scalar(field, v as u64);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut within, mut beyond, mut beyond_fail) = (0u64, 0u64, 0u64);
    for n in 1..=7usize {
        let alphas: Vec<u64> = (1..=n as u64).collect();
        for deg in 0..=2usize {
            if n < deg + 1 {
                continue;
            }
            let bound = (n - deg - 1) / 2;
            // every polynomial of degree <= deg, for the closest-codeword oracle
            let all_polys: Vec<Vec<u128>> = (0..11u128.pow(deg as u32 + 1))
                .map(|mut k| {
                    (0..=deg)
                        .map(|_| {
                            let c = k % 11;
                            k /= 11;
                            c
                        })
                        .collect()
                })
                .collect();
            let codewords: Vec<Vec<u128>> = all_polys
                .iter()
                .map(|cs| alphas.iter().map(|&a| horner(cs, a as u128, p)).collect())
                .collect();
            for _ in 0..2 {
                let planted: Vec<u128> = (0..=deg).map(|_| rng.random_range(0..11)).collect();
                let clean: Vec<u128> = alphas
                    .iter()
                    .map(|&a| horner(&planted, a as u128, p))
                    .collect();
                for weight in 0..=(bound + 1).min(n) {
                    for mask in 0u32..(1 << n) {
                        if mask.count_ones() as usize != weight {
                            continue;
                        }
                        let pos: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
                        for mut combo in 0..10u64.pow(weight as u32) {
                            let mut word = clean.clone();
                            for &i in &pos {
                                word[i] = (word[i] + 1 + (combo % 10) as u128) % p;
                                combo /= 10;
                            }
                            let received: Vec<FMatrix> = word.iter().map(|&v| scalar(v)).collect();
                            let res = decode(field, deg, &alphas, &received, max_errors(n, deg));
                            if weight <= bound {
                                let d = res
                                    .map_err(|e| format!("n={n} deg={deg} errors {pos:?}: {e}"))?;
                                let got: Vec<u128> = (0..=deg)
                                    .map(|i| d.poly.coeff(i).data()[0] as u128)
                                    .collect();
                                check(got == planted, || {
                                    format!("n={n} deg={deg} errors {pos:?}: wrong polynomial")
                                })?;
                                let errs: BTreeSet<usize> = pos.iter().copied().collect();
                                check(d.errors == errs, || {
                                    format!("n={n} deg={deg}: error set {:?} != {pos:?}", d.errors)
                                })?;
                                within += 1;
                            } else {
                                beyond += 1;
                                match res {
                                    Err(RsError::DecodingFailure { .. }) => beyond_fail += 1,
                                    Err(e) => {
                                        return Err(format!(
                                            "n={n} deg={deg}: unexpected error {e}"
                                        ))
                                    }
                                    Ok(d) => {
                                        let got: Vec<u128> = (0..=deg)
                                            .map(|i| d.poly.coeff(i).data()[0] as u128)
                                            .collect();
                                        let dist = |cw: &[u128]| {
                                            cw.iter().zip(&word).filter(|(a, b)| a != b).count()
                                        };
                                        let best = codewords
                                            .iter()
                                            .map(|c| dist(c))
                                            .min()
                                            .unwrap_or(usize::MAX);
                                        let mine: Vec<u128> = alphas
                                            .iter()
                                            .map(|&a| horner(&got, a as u128, p))
                                            .collect();
                                        check(dist(&mine) == best, || {
                                            format!("n={n} deg={deg}: beyond-bound result is not a closest codeword")
                                        })?;
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(format!("{within} correctable patterns exact; {beyond} beyond-bound ({beyond_fail} reported failure)"))
}

fn c5_masks() -> Outcome {
    let field = Field::new(Field::DEFAULT_PRIME).expect("prime");
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for (m, t) in [(2, 1), (2, 2), (3, 1)] {
        let (rows, width) = (2 * m, 2);
        for trial in 0..100 {
            let a_share = rng.matrix(field, rows, width);
            let b_share = rng.matrix(field, rows, width);
            let a_n = subshare_poly(&a_share, m - 1, t, &mut rng);
            let blocks = b_share
                .block_split(m, Axis::Rows)
                .map_err(|e| e.to_string())?;
            let mut b_hat = MatPoly::zero(field, rows / m, width);
            for (j, blk) in blocks.iter().enumerate() {
                b_hat = b_hat
                    .add(&subshare_poly(blk, m - j - 1, t, &mut rng).shift(j))
                    .map_err(|e| e.to_string())?;
            }
            let masks = build_masks(&a_n, &b_hat, m, t, &mut rng).map_err(|e| e.to_string())?;
            check(masks.polys.iter().all(|o| o.len() <= t + 1), || {
                format!("m={m} t={t} trial {trial}: mask degree")
            })?;
            let c = masks
                .apply(&product_poly(&a_n, &b_hat).map_err(|e| e.to_string())?)
                .map_err(|e| e.to_string())?;
            check(c.len() <= m + t, || {
                format!("m={m} t={t} trial {trial}: deg C = {:?}", c.degree())
            })?;
            let full = naive_abt(&a_share, &b_share);
            let bw = rows / m;
            for k in 0..m {
                let want: Vec<Vec<u64>> = full
                    .iter()
                    .map(|r| r[k * bw..(k + 1) * bw].to_vec())
                    .collect();
                check(rows_of(&c.coeff(k)) == want, || {
                    format!("m={m} t={t} trial {trial}: coefficient {k}")
                })?;
            }
        }
    }
    Ok("300 mask sets: degree bound and data coefficients exact".into())
}

fn c6_lambda() -> Outcome {
    let field = Field::new(Field::DEFAULT_PRIME).expect("prime");
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut trials = 0;
    for (m, t) in [(1, 1), (2, 1), (2, 2), (3, 1)] {
        let n = 2 * m + 2 * t - 1;
        let z = 2 * m;
        let alphas: Vec<u64> = (1..=n as u64).collect();
        let lambda = extraction_weights(field, &alphas, m - 1).map_err(|e| e.to_string())?;
        for _ in 0..100 {
            let a = rng.matrix(field, z, z);
            let b = rng.matrix(field, z, z);
            let pa = make_share_poly(&a, ShareLabel::new(m, t, 0, Direction::Direct), &mut rng)
                .map_err(|e| e.to_string())?;
            let pb = make_share_poly(&b, ShareLabel::new(m, t, 0, Direction::Reverse), &mut rng)
                .map_err(|e| e.to_string())?;
            let mut acc = FMatrix::zeros(field, z, z);
            for (&x, &l) in alphas.iter().zip(&lambda) {
                let prod = pa
                    .eval(x)
                    .mul(&pb.eval(x).transpose())
                    .map_err(|e| e.to_string())?;
                acc.add_scaled(&prod, l);
            }
            check(rows_of(&acc) == naive_abt(&a, &b), || {
                format!("m={m} t={t}: recombination differs from A·Bᵀ")
            })?;
            trials += 1;
        }
    }
    Ok(format!("{trials} trials exact"))
}

fn c7_transforms(ledger: &mut Ledger) -> Outcome {
    let (m, t, n) = (2, 1, 6);
    let round_trip = "SHARE A direct -> a\nD2R a -> r\nR2D r -> d\nREVEAL r\nREVEAL d";
    let transpose = "SHARE A direct -> a\nTRANSPOSE a -> b\nREVEAL b";
    for (name, prog) in [("round trip", round_trip), ("transpose", transpose)] {
        for seed in 0..50u64 {
            let strategy = Strategy::MALICIOUS[seed as usize % Strategy::MALICIOUS.len()];
            let text = format!(
                "[params]\nn={n}\nt={t}\nm={m}\nseed={seed}\nz=4\n[adversaries]\n{n}={strategy}\n[inputs]\nA=random\n[program]\n{prog}"
            );
            let s = Scenario::parse(&text).map_err(|e| e.to_string())?;
            let a = s.input_matrices().remove(0).1;
            let tr = run_scenario(&s);
            ledger.note_run("criterion 7", &s.adversaries, &tr.records);
            let out = tr
                .outcome
                .map_err(|e| format!("{name} seed {seed}: abort {e}"))?;
            let want = if name == "transpose" {
                vec![naive_transpose(&a)]
            } else {
                vec![rows_of(&a), rows_of(&a)]
            };
            let got: Vec<Vec<Vec<u64>>> = out.iter().map(|(_, v)| rows_of(v)).collect();
            check(got == want, || {
                format!("{name} seed {seed} ({strategy}): wrong reconstruction")
            })?;
        }
    }
    Ok("50 round trips and 50 transposes exact (one cheating worker each)".into())
}

fn c8_audit() -> Outcome {
    let mut notes = Vec::new();
    for case in ["share-m1", "share-m2", "mul"] {
        let lines = run_case(case, 10_000, 0).map_err(|e| format!("{case}: {e}"))?;
        for l in &lines {
            check(!l.leaks(), || {
                format!("{case} {}: {}", l.observers, l.to_json())
            })?;
        }
        notes.push(format!("{case}: {} subsets TV=0", lines.len()));
    }
    let leak = run_case("leak", 10_000, 0).map_err(|e| e.to_string())?;
    check(leak.iter().all(|l| l.leaks()), || {
        "planted leak not detected".into()
    })?;
    notes.push("planted leak TV>0".into());
    notes.push("m=2 multiplication needs 5 distinct nonzero points, GF(5) has 4".into());
    Ok(notes.join("; "))
}

fn c9_subroutines(ledger: &mut Ledger) -> Outcome {
    for (strategy, reason) in [
        (Strategy::WrongSubshareConstant, Reason::BadSubshareValue),
        (Strategy::BadGapCoefficient, Reason::BadGapForm),
    ] {
        for (m, t) in [(2, 1), (2, 2)] {
            let n = recovery_threshold(m, t);
            for seed in 0..50u64 {
                let s = malicious(n, t, m, seed, Some(strategy));
                let tr = run_scenario(&s);
                ledger.note_run("criterion 9", &s.adversaries, &tr.records);
                let got: BTreeSet<(PartyId, Reason)> = tr.eliminations().into_iter().collect();
                let want: BTreeSet<(PartyId, Reason)> =
                    s.adversaries.keys().map(|&p| (p, reason)).collect();
                check(got == want, || {
                    format!("{strategy} m={m} t={t} seed {seed}: eliminations {got:?}")
                })?;
                check(tr.outcome.is_ok(), || {
                    format!("{strategy} seed {seed}: aborted")
                })?;
            }
        }
    }
    check(ledger.honest_eliminations.is_empty(), || {
        format!("honest eliminations: {:?}", ledger.honest_eliminations)
    })?;
    Ok(
        "200 runs with the exact reason code; no honest party eliminated in criteria 2, 7, 9"
            .into(),
    )
}

fn c10_determinism() -> Outcome {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios");
    let mut files: Vec<PathBuf> = std::fs::read_dir(&dir)
        .map_err(|e| format!("{}: {e}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "scn"))
        .collect();
    files.sort();
    check(!files.is_empty(), || "no scenario files".into())?;
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    for f in &files {
        let mut outputs = Vec::new();
        for k in 0..2 {
            let out = tmp.path().join(format!(
                "{}-{k}",
                f.file_stem().unwrap_or_default().to_string_lossy()
            ));
            let args = RunArgs {
                scenario: f.clone(),
                out: Some(out.clone()),
                ..Default::default()
            };
            let code = cmd_run(&args, &mut Vec::new());
            let tr = std::fs::read(out.join("transcript.jsonl")).map_err(|e| e.to_string())?;
            let sum = std::fs::read(out.join("summary.json")).map_err(|e| e.to_string())?;
            outputs.push((code, tr, sum));
        }
        check(outputs[0] == outputs[1], || {
            format!("{}: outputs differ between runs", f.display())
        })?;
        let text = String::from_utf8(outputs[0].1.clone()).map_err(|e| e.to_string())?;
        let records = parse_transcript(&text).map_err(|e| format!("{}: {e}", f.display()))?;
        let again: String = records
            .iter()
            .map(|r| RawRecord::from(r).to_line() + "\n")
            .collect();
        check(again == text, || {
            format!("{}: transcript does not round-trip", f.display())
        })?;
    }
    Ok(format!(
        "{} scenario files byte-identical across runs; transcripts round-trip",
        files.len()
    ))
}

fn main() {
    let mut ledger = Ledger::default();
    let mut failed = 0;
    let start = Instant::now();
    let mut report =
        |id: u32, name: &str, f: &mut dyn FnMut(&mut Ledger) -> Outcome, ledger: &mut Ledger| {
            let t0 = Instant::now();
            let res = f(ledger);
            let secs = t0.elapsed().as_secs_f64();
            match res {
                Ok(note) => println!("criterion {id:>2} PASS {name} [{secs:.1}s] {note}"),
                Err(why) => {
                    failed += 1;
                    println!("criterion {id:>2} FAIL {name} [{secs:.1}s] {why}");
                }
            }
        };
    report(1, "threshold formula", &mut |_| c1_threshold(), &mut ledger);
    report(
        2,
        "malicious end-to-end correctness",
        &mut c2_malicious,
        &mut ledger,
    );
    report(3, "EVSS guarantees", &mut |_| c3_evss(), &mut ledger);
    report(
        4,
        "Reed-Solomon decoder",
        &mut |_| c4_decoder(),
        &mut ledger,
    );
    report(5, "mask construction", &mut |_| c5_masks(), &mut ledger);
    report(6, "lambda recombination", &mut |_| c6_lambda(), &mut ledger);
    report(7, "transform correctness", &mut c7_transforms, &mut ledger);
    report(8, "exact privacy audit", &mut |_| c8_audit(), &mut ledger);
    report(9, "subroutine soundness", &mut c9_subroutines, &mut ledger);
    report(10, "determinism", &mut |_| c10_determinism(), &mut ledger);
    println!(
        "acceptance: {} of 10 passed in {:.1}s",
        10 - failed,
        start.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}

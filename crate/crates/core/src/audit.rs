//! Privacy audits over simulated transcripts.
//!
//! A view is everything a set of observers receives: private envelopes
//! addressed to them plus broadcasts (workers only). Three methods compare
//! the view distributions under two secret assignments:
//!
//! * exhaustive enumeration of every honest coin tape (small fields only);
//! * exact affine analysis: when a view is an affine function of the coins
//!   (true for the semi-honest path) its distribution is uniform on a coset,
//!   so two distributions can be compared with rank computations;
//! * a Monte-Carlo chi-square comparison of every scalar view field.

use std::collections::{BTreeMap, BTreeSet};

use num_rational::Ratio;
use rand::RngCore;
use rayon::prelude::*;
use serde_json::json;
use sha2::{Digest, Sha256};
use statrs::distribution::{ChiSquared, ContinuousCDF};
use thiserror::Error;

use crate::adversary::Strategy;
use crate::coins::{derive_rng, Actor, Coins, Randomness, SeededCoins, TapeCoins};
use crate::evss::{run_evss_batch, EvssJob, EvssMsg};
use crate::gf::{FMatrix, Field};
use crate::net::{Endpoint, Envelope, NetParams, Network, Payload, ProtocolError, Record};
use crate::poly::MatPoly;
use crate::scenario::{run_scenario_with, InputSpec, Scenario, ScenarioError};
use crate::subroutines::subshare_poly;

/// Largest coin space enumerated exhaustively.
pub const MAX_STATES: u64 = 1 << 24;

/// Family-wise false-alarm rate of the Monte-Carlo audit.
pub const MC_ALPHA: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum AuditError {
    #[error("{draws} draws over GF({prime}) exceed the enumeration guard of 2^24 states")]
    SpaceTooLarge { draws: usize, prime: u64 },
    #[error("draw count changed between runs ({expected} then {got})")]
    UnstableDraws { expected: usize, got: usize },
    #[error("view is not an affine function of the coins")]
    NotAffine,
    #[error("Monte-Carlo audit needs at least 1000 samples, got {0}")]
    TooFewSamples(usize),
    #[error("unknown audit case {0:?}")]
    UnknownCase(String),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
}

/// Executes one protocol run with the given coins and returns its records.
pub type Runner<'a> = dyn Fn(Box<dyn Coins>) -> Vec<Record> + Sync + 'a;

// ---------------------------------------------------------------------------
// Views

pub fn visible(e: &Envelope, observers: &[Endpoint]) -> bool {
    observers.contains(&e.to)
        || (e.is_broadcast() && observers.iter().any(|o| matches!(o, Endpoint::Worker(_))))
}

trait Sink {
    fn head(&mut self, idx: usize, e: &Envelope);
    fn discrete(&mut self, v: u64);
    fn mat(&mut self, idx: usize, slot: u8, coef: usize, m: &FMatrix);
}

fn walk(records: &[Record], observers: &[Endpoint], sink: &mut impl Sink) {
    let visible = records.iter().filter_map(|r| match r {
        Record::Envelope(e) if visible(e, observers) => Some(e),
        _ => None,
    });
    for (idx, e) in visible.enumerate() {
        sink.head(idx, e);
        match &e.payload {
            Payload::Value(m) => sink.mat(idx, 0, 0, m),
            Payload::Row(vs) => {
                sink.discrete(vs.len() as u64);
                for (i, v) in vs.iter().enumerate() {
                    sink.mat(idx, 1, i, v);
                }
            }
            Payload::Accuse(p) => sink.discrete(*p as u64),
            Payload::Evss(msg) => match msg {
                EvssMsg::Deal { f, g } => {
                    poly(sink, idx, 2, f);
                    poly(sink, idx, 3, g);
                }
                EvssMsg::Cross { f_at, g_at } => {
                    sink.mat(idx, 4, 0, f_at);
                    sink.mat(idx, 5, 0, g_at);
                }
                EvssMsg::Complaint { accused, values } => {
                    sink.discrete(*accused as u64);
                    sink.discrete(values.is_some() as u64);
                    if let Some((a, b)) = values {
                        sink.mat(idx, 6, 0, a);
                        sink.mat(idx, 7, 0, b);
                    }
                }
                EvssMsg::Reveal { target, f, g } => {
                    sink.discrete(*target as u64);
                    poly(sink, idx, 8, f);
                    poly(sink, idx, 9, g);
                }
                EvssMsg::Consistent => {}
            },
        }
    }
}

fn poly(sink: &mut impl Sink, idx: usize, slot: u8, p: &MatPoly) {
    for (i, c) in p.coeffs().iter().enumerate() {
        sink.mat(idx, slot, i, c);
    }
}

fn head_bytes(out: &mut Vec<u8>, e: &Envelope) {
    out.extend_from_slice(&e.round.to_le_bytes());
    for s in [
        e.from.to_string(),
        e.to.to_string(),
        e.tag.clone(),
        e.payload.kind().to_string(),
    ] {
        out.extend_from_slice(&(s.len() as u32).to_le_bytes());
        out.extend_from_slice(s.as_bytes());
    }
}

struct BytesSink(Vec<u8>);

impl Sink for BytesSink {
    fn head(&mut self, _: usize, e: &Envelope) {
        self.0.push(0xE0);
        head_bytes(&mut self.0, e);
    }

    fn discrete(&mut self, v: u64) {
        self.0.push(0xD0);
        self.0.extend_from_slice(&v.to_le_bytes());
    }

    fn mat(&mut self, _: usize, slot: u8, coef: usize, m: &FMatrix) {
        self.0.push(slot);
        for x in [coef, m.rows(), m.cols()] {
            self.0.extend_from_slice(&(x as u32).to_le_bytes());
        }
        for v in m.data() {
            self.0.extend_from_slice(&v.to_le_bytes());
        }
    }
}

/// Canonical serialization of the observers' view.
pub fn view_bytes(records: &[Record], observers: &[Endpoint]) -> Vec<u8> {
    let mut sink = BytesSink(Vec::new());
    walk(records, observers, &mut sink);
    sink.0
}

pub fn view_digest(records: &[Record], observers: &[Endpoint]) -> [u8; 32] {
    Sha256::digest(view_bytes(records, observers)).into()
}

/// Position of one matrix inside a view: envelope index, payload slot,
/// coefficient index and shape.
type SlotKey = (u32, u8, u32, u32, u32);

/// A view split into its discrete structure and its field-valued slots.
struct SlotView {
    skeleton: [u8; 32],
    slots: BTreeMap<SlotKey, Vec<u64>>,
}

struct SlotSink {
    skeleton: Vec<u8>,
    slots: BTreeMap<SlotKey, Vec<u64>>,
}

impl Sink for SlotSink {
    fn head(&mut self, _: usize, e: &Envelope) {
        head_bytes(&mut self.skeleton, e);
    }

    fn discrete(&mut self, v: u64) {
        self.skeleton.extend_from_slice(&v.to_le_bytes());
    }

    fn mat(&mut self, idx: usize, slot: u8, coef: usize, m: &FMatrix) {
        let key = (
            idx as u32,
            slot,
            coef as u32,
            m.rows() as u32,
            m.cols() as u32,
        );
        self.slots.insert(key, m.data().to_vec());
    }
}

fn slot_view(records: &[Record], observers: &[Endpoint]) -> SlotView {
    let mut sink = SlotSink {
        skeleton: Vec::new(),
        slots: BTreeMap::new(),
    };
    walk(records, observers, &mut sink);
    SlotView {
        skeleton: Sha256::digest(&sink.skeleton).into(),
        slots: sink.slots,
    }
}

// ---------------------------------------------------------------------------
// Distributions

/// View digest → number of coin tapes producing it.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DistTable {
    counts: BTreeMap<[u8; 32], u64>,
    total: u64,
}

impl DistTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, view: [u8; 32]) {
        *self.counts.entry(view).or_default() += 1;
        self.total += 1;
    }

    pub fn merge(mut self, other: DistTable) -> DistTable {
        for (k, c) in other.counts {
            *self.counts.entry(k).or_default() += c;
        }
        self.total += other.total;
        self
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// Number of distinct views.
    pub fn support(&self) -> usize {
        self.counts.len()
    }

    pub fn probability(&self, view: &[u8; 32]) -> Ratio<u128> {
        let c = self.counts.get(view).copied().unwrap_or(0);
        Ratio::new(c as u128, self.total.max(1) as u128)
    }
}

/// `½ Σ |a(v) − b(v)|`, exactly.
pub fn tv_distance(a: &DistTable, b: &DistTable) -> Ratio<u128> {
    if a.total == 0 || b.total == 0 {
        return Ratio::from_integer(u128::from(a.total != b.total));
    }
    let (na, nb) = (a.total as u128, b.total as u128);
    let keys: BTreeSet<&[u8; 32]> = a.counts.keys().chain(b.counts.keys()).collect();
    let sum: u128 = keys
        .into_iter()
        .map(|k| {
            let x = a.counts.get(k).copied().unwrap_or(0) as u128 * nb;
            let y = b.counts.get(k).copied().unwrap_or(0) as u128 * na;
            x.abs_diff(y)
        })
        .sum();
    Ratio::new(sum, 2 * na * nb)
}

fn count_draws(run: &Runner<'_>, fixed: &BTreeSet<Actor>) -> usize {
    let (coins, drawn) = TapeCoins::counted(Vec::new(), fixed.clone());
    run(Box::new(coins));
    drawn.load(std::sync::atomic::Ordering::Relaxed)
}

fn tape_for(mut idx: u64, p: u64, k: usize) -> Vec<u64> {
    (0..k)
        .map(|_| {
            let d = idx % p;
            idx /= p;
            d
        })
        .collect()
}

/// Exact view distribution over every tape of honest coins. Actors in
/// `fixed` (the observers themselves) draw zeros.
pub fn enumerate_views(
    run: &Runner<'_>,
    field: Field,
    fixed: &BTreeSet<Actor>,
    observers: &[Endpoint],
) -> Result<DistTable, AuditError> {
    let p = field.modulus();
    let k = count_draws(run, fixed);
    let states = u32::try_from(k)
        .ok()
        .and_then(|k| p.checked_pow(k))
        .filter(|&s| s <= MAX_STATES)
        .ok_or(AuditError::SpaceTooLarge { draws: k, prime: p })?;
    (0..states)
        .into_par_iter()
        .try_fold(DistTable::new, |mut table, idx| {
            let (coins, drawn) = TapeCoins::counted(tape_for(idx, p, k), fixed.clone());
            let records = run(Box::new(coins));
            let got = drawn.load(std::sync::atomic::Ordering::Relaxed);
            if got != k {
                return Err(AuditError::UnstableDraws { expected: k, got });
            }
            table.add(view_digest(&records, observers));
            Ok(table)
        })
        .try_reduce(DistTable::new, |a, b| Ok(a.merge(b)))
}

/// A view distribution known to be uniform on `offset + span(dirs)`.
#[derive(Clone, Debug)]
pub struct AffineView {
    field: Field,
    skeleton: [u8; 32],
    offset: BTreeMap<SlotKey, Vec<u64>>,
    dirs: Vec<BTreeMap<SlotKey, Vec<u64>>>,
    /// Number of honest coins.
    pub draws: usize,
}

fn flatten(map: &BTreeMap<SlotKey, Vec<u64>>, keys: &BTreeMap<SlotKey, usize>) -> Vec<u64> {
    let mut out = Vec::new();
    for (k, &len) in keys {
        match map.get(k) {
            Some(v) => out.extend_from_slice(v),
            None => out.extend(std::iter::repeat_n(0, len)),
        }
    }
    out
}

fn key_lengths<'a>(
    maps: impl IntoIterator<Item = &'a BTreeMap<SlotKey, Vec<u64>>>,
) -> BTreeMap<SlotKey, usize> {
    let mut keys = BTreeMap::new();
    for m in maps {
        for (k, v) in m {
            keys.insert(*k, v.len());
        }
    }
    keys
}

/// Probes the view with unit coin tapes to recover its affine form, then
/// confirms the form on `checks` random tapes.
pub fn affine_view(
    run: &Runner<'_>,
    field: Field,
    fixed: &BTreeSet<Actor>,
    observers: &[Endpoint],
    checks: usize,
    seed: u64,
) -> Result<AffineView, AuditError> {
    let k = count_draws(run, fixed);
    let probe = |tape: Vec<u64>| -> Result<SlotView, AuditError> {
        let (coins, drawn) = TapeCoins::counted(tape, fixed.clone());
        let records = run(Box::new(coins));
        let got = drawn.load(std::sync::atomic::Ordering::Relaxed);
        if got != k {
            return Err(AuditError::UnstableDraws { expected: k, got });
        }
        Ok(slot_view(&records, observers))
    };
    let base = probe(vec![0; k])?;
    let mut units = Vec::with_capacity(k);
    for i in 0..k {
        let mut tape = vec![0; k];
        tape[i] = 1;
        let v = probe(tape)?;
        if v.skeleton != base.skeleton {
            return Err(AuditError::NotAffine);
        }
        units.push(v.slots);
    }
    let keys = key_lengths(std::iter::once(&base.slots).chain(&units));
    let v0 = flatten(&base.slots, &keys);
    let cols: Vec<Vec<u64>> = units
        .iter()
        .map(|u| {
            flatten(u, &keys)
                .iter()
                .zip(&v0)
                .map(|(&a, &b)| field.sub(a, b))
                .collect()
        })
        .collect();
    let mut rng = derive_rng(seed, "affine-check");
    for _ in 0..checks {
        let tape: Vec<u64> = (0..k).map(|_| rng.elem(field)).collect();
        let v = probe(tape.clone())?;
        if v.skeleton != base.skeleton || v.slots.keys().any(|key| !keys.contains_key(key)) {
            return Err(AuditError::NotAffine);
        }
        let mut want = v0.clone();
        for (c, &r) in cols.iter().zip(&tape) {
            for (w, &x) in want.iter_mut().zip(c) {
                *w = field.add(*w, field.mul(r, x));
            }
        }
        if flatten(&v.slots, &keys) != want {
            return Err(AuditError::NotAffine);
        }
    }
    let dirs = units
        .into_iter()
        .map(|u| {
            let mut d = u;
            for (key, v) in d.iter_mut() {
                let b = base.slots.get(key);
                for (i, x) in v.iter_mut().enumerate() {
                    *x = field.sub(*x, b.map_or(0, |b| b[i]));
                }
            }
            for (key, v) in &base.slots {
                d.entry(*key)
                    .or_insert_with(|| v.iter().map(|&x| field.neg(x)).collect());
            }
            d
        })
        .collect();
    Ok(AffineView {
        field,
        skeleton: base.skeleton,
        offset: base.slots,
        dirs,
        draws: k,
    })
}

fn rank_of(field: Field, rows: &[Vec<u64>], width: usize) -> usize {
    if rows.is_empty() || width == 0 {
        return 0;
    }
    let data = rows.iter().flatten().copied().collect();
    FMatrix::new(field, rows.len(), width, data)
        .expect("sized")
        .rank()
}

/// Exact total-variation distance between two affine view distributions.
pub fn affine_tv(a: &AffineView, b: &AffineView) -> Ratio<u128> {
    if a.skeleton != b.skeleton {
        return Ratio::from_integer(1);
    }
    let field = a.field;
    let keys = key_lengths(
        std::iter::once(&a.offset)
            .chain(&a.dirs)
            .chain(std::iter::once(&b.offset))
            .chain(&b.dirs),
    );
    let width: usize = keys.values().sum();
    let da: Vec<Vec<u64>> = a.dirs.iter().map(|d| flatten(d, &keys)).collect();
    let db: Vec<Vec<u64>> = b.dirs.iter().map(|d| flatten(d, &keys)).collect();
    let diff: Vec<u64> = flatten(&b.offset, &keys)
        .iter()
        .zip(flatten(&a.offset, &keys))
        .map(|(&x, y)| field.sub(x, y))
        .collect();
    let r1 = rank_of(field, &da, width);
    let r2 = rank_of(field, &db, width);
    let mut both = da.clone();
    both.extend(db);
    let r12 = rank_of(field, &both, width);
    both.push(diff);
    if rank_of(field, &both, width) != r12 {
        return Ratio::from_integer(1);
    }
    // |U1 ∩ U2| / max(|U1|, |U2|) = p^(dim(S1 ∩ S2) - max dim)
    let gap = r1.max(r2) - (r1 + r2 - r12);
    if gap == 0 {
        return Ratio::from_integer(0);
    }
    let denom = (field.modulus() as u128)
        .checked_pow(gap as u32)
        .unwrap_or(u128::MAX);
    Ratio::new(denom - 1, denom)
}

// ---------------------------------------------------------------------------
// Monte-Carlo

#[derive(Clone, Debug, PartialEq)]
pub struct McReport {
    pub samples: usize,
    /// Scalar view positions compared.
    pub fields: usize,
    /// Chi-square statistic threshold at the corrected level (largest df).
    pub critical: f64,
    /// Largest statistic-to-critical ratio observed.
    pub worst_ratio: f64,
    pub flagged: Vec<String>,
}

type Slots = BTreeMap<SlotKey, Vec<u64>>;

fn collect(
    run: &Runner<'_>,
    observers: &[Endpoint],
    samples: usize,
    seed: u64,
    side: &str,
) -> (BTreeSet<[u8; 32]>, Vec<Slots>) {
    let views: Vec<SlotView> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let s = derive_rng(seed, &format!("mc/{side}/{i}")).next_u64();
            slot_view(&run(Box::new(SeededCoins::new(s))), observers)
        })
        .collect();
    let skeletons = views.iter().map(|v| v.skeleton).collect();
    (skeletons, views.into_iter().map(|v| v.slots).collect())
}

/// Compares every scalar view position between two runners with a
/// two-sample chi-square homogeneity test (16 equal-width buckets, or exact
/// values when at most 16 occur), Bonferroni-corrected to [`MC_ALPHA`].
pub fn monte_carlo_audit(
    run_a: &Runner<'_>,
    run_b: &Runner<'_>,
    field: Field,
    observers: &[Endpoint],
    samples: usize,
    seed: u64,
) -> Result<McReport, AuditError> {
    if samples < 1000 {
        return Err(AuditError::TooFewSamples(samples));
    }
    let (ska, va) = collect(run_a, observers, samples, seed, "a");
    let (skb, vb) = collect(run_b, observers, samples, seed, "b");
    let mut flagged = Vec::new();
    if ska != skb {
        flagged.push("message structure differs".to_string());
    }
    let keys = key_lengths(va.iter().chain(&vb));
    let fields: usize = keys.values().sum();
    let p = field.modulus();
    let mut worst: f64 = 0.0;
    let mut critical_max: f64 = 0.0;
    for (key, &len) in &keys {
        for e in 0..len {
            let pick = |v: &BTreeMap<SlotKey, Vec<u64>>| v.get(key).map_or(0, |x| x[e]);
            let xa: Vec<u64> = va.iter().map(pick).collect();
            let xb: Vec<u64> = vb.iter().map(pick).collect();
            let distinct: BTreeSet<u64> = xa.iter().chain(&xb).copied().take(10_000).collect();
            let bucket = |v: u64| -> u64 {
                if distinct.len() <= 16 {
                    v
                } else {
                    ((v as u128 * 16) / p as u128) as u64
                }
            };
            let mut table: BTreeMap<u64, (f64, f64)> = BTreeMap::new();
            for &v in &xa {
                table.entry(bucket(v)).or_default().0 += 1.0;
            }
            for &v in &xb {
                table.entry(bucket(v)).or_default().1 += 1.0;
            }
            if table.len() < 2 {
                continue;
            }
            let (na, nb) = (xa.len() as f64, xb.len() as f64);
            let stat: f64 = table
                .values()
                .map(|&(oa, ob)| {
                    let tot = oa + ob;
                    let (ea, eb) = (tot * na / (na + nb), tot * nb / (na + nb));
                    (oa - ea).powi(2) / ea + (ob - eb).powi(2) / eb
                })
                .sum();
            let df = (table.len() - 1) as f64;
            let crit = ChiSquared::new(df)
                .expect("positive df")
                .inverse_cdf(1.0 - MC_ALPHA / fields.max(1) as f64);
            critical_max = critical_max.max(crit);
            worst = worst.max(stat / crit);
            if stat > crit {
                flagged.push(format!(
                    "envelope {} slot {} coef {} entry {e}: chi2 {stat:.1} > {crit:.1}",
                    key.0, key.1, key.2
                ));
            }
        }
    }
    Ok(McReport {
        samples,
        fields,
        critical: critical_max,
        worst_ratio: worst,
        flagged,
    })
}

// ---------------------------------------------------------------------------
// Audit cases

pub const CASES: [&str; 8] = [
    "share-m1", "share-m2", "evss", "mul", "master", "leak", "mc", "mc-leak",
];

/// Cases run when no grid is given: everything except planted leaks.
pub const DEFAULT_CASES: [&str; 6] = ["share-m1", "share-m2", "evss", "mul", "master", "mc"];

/// Parses `case1,case2`, `all` (the default cases) or an empty grid.
pub fn parse_grid(grid: &str) -> Result<Vec<String>, AuditError> {
    let grid = grid.trim();
    let grid = grid.strip_prefix("case=").unwrap_or(grid);
    let mut out = Vec::new();
    for item in grid
        .split([',', ';'])
        .map(str::trim)
        .filter(|s| !s.is_empty())
    {
        if item == "all" {
            out.extend(DEFAULT_CASES.iter().map(|s| s.to_string()));
        } else if CASES.contains(&item) {
            out.push(item.to_string());
        } else {
            return Err(AuditError::UnknownCase(item.to_string()));
        }
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub enum Finding {
    Exact {
        method: &'static str,
        draws: usize,
        tv: Ratio<u128>,
    },
    Sampled(McReport),
}

/// One audited (case, observers) pair.
#[derive(Clone, Debug)]
pub struct CaseLine {
    pub case: String,
    pub observers: String,
    pub finding: Finding,
}

impl CaseLine {
    pub fn leaks(&self) -> bool {
        match &self.finding {
            Finding::Exact { tv, .. } => *tv != Ratio::from_integer(0),
            Finding::Sampled(r) => !r.flagged.is_empty(),
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        match &self.finding {
            Finding::Exact { method, draws, tv } => json!({
                "case": self.case,
                "observers": self.observers,
                "method": method,
                "draws": draws,
                "tv": tv.to_string(),
                "leak": self.leaks(),
            }),
            Finding::Sampled(r) => json!({
                "case": self.case,
                "observers": self.observers,
                "method": "monte-carlo",
                "samples": r.samples,
                "fields": r.fields,
                "critical": r.critical,
                "worst_ratio": r.worst_ratio,
                "flagged": r.flagged,
                "leak": self.leaks(),
            }),
        }
    }
}

fn rows(v: &[&[u64]]) -> InputSpec {
    InputSpec::Rows(v.iter().map(|r| r.to_vec()).collect())
}

struct Template {
    base: Scenario,
    leaky: bool,
}

impl Template {
    fn new(n: usize, t: usize, m: usize, prime: u64, program: &str) -> Result<Self, AuditError> {
        let text = format!(
            "[params]\nn={n}\nt={t}\nm={m}\nprime={prime}\nprotocol=semi-honest\nsub_threshold=true\n\
             [inputs]\nA=random\nB=random\n[program]\n{program}"
        );
        Ok(Template {
            base: Scenario::parse(&text)?,
            leaky: false,
        })
    }

    fn with(
        &self,
        inputs: Vec<(String, InputSpec)>,
        observer: Option<usize>,
    ) -> Result<Scenario, AuditError> {
        let mut s = self.base.clone();
        s.inputs = inputs;
        s.adversaries = observer
            .map(|k| (k, Strategy::SemiHonest))
            .into_iter()
            .collect();
        s.validate()?;
        Ok(s)
    }

    fn runner(&self, s: Scenario) -> impl Fn(Box<dyn Coins>) -> Vec<Record> + Sync {
        let leaky = self.leaky;
        move |coins| run_scenario_with(&s, coins, leaky).records
    }
}

type Secrets = Vec<(String, InputSpec)>;

fn observer_sets(n: usize) -> Vec<(String, Vec<Endpoint>, Option<usize>)> {
    (1..=n)
        .map(|k| (format!("w{k}"), vec![Endpoint::Worker(k)], Some(k)))
        .collect()
}

fn fixed_for(observer: Option<usize>) -> BTreeSet<Actor> {
    observer.map(Actor::Worker).into_iter().collect()
}

fn exact_case(
    name: &str,
    tpl: &Template,
    pair: (Secrets, Secrets),
    observers: Vec<(String, Vec<Endpoint>, Option<usize>)>,
) -> Result<Vec<CaseLine>, AuditError> {
    let field = tpl.base.field();
    let mut out = Vec::new();
    for (label, obs, who) in observers {
        let fixed = fixed_for(who);
        let ra = tpl.runner(tpl.with(pair.0.clone(), who)?);
        let rb = tpl.runner(tpl.with(pair.1.clone(), who)?);
        let a = enumerate_views(&ra, field, &fixed, &obs)?;
        let b = enumerate_views(&rb, field, &fixed, &obs)?;
        let finding = Finding::Exact {
            method: "enumerate",
            draws: count_draws(&ra, &fixed),
            tv: tv_distance(&a, &b),
        };
        out.push(CaseLine {
            case: name.to_string(),
            observers: label,
            finding,
        });
    }
    Ok(out)
}

fn evss_case() -> Result<Vec<CaseLine>, AuditError> {
    let field = Field::new(5).expect("prime");
    let (n, t, m, dealer) = (4, 1, 1, 1);
    let runner = |secret: FMatrix, observer: usize| {
        move |coins: Box<dyn Coins>| {
            let params = NetParams { field, n, t, m };
            let adv = BTreeMap::from([(observer, Strategy::SemiHonest)]);
            let mut net = Network::new(params, adv, coins, 0);
            let q = subshare_poly(
                &secret,
                0,
                t,
                &mut net.stream(Actor::Worker(dealer), "evss/q"),
            );
            let job = EvssJob {
                tag: "evss".into(),
                dealer,
                poly: q,
                degree: t,
            };
            if let Err(e) = run_evss_batch(&mut net, vec![job]) {
                net.record(Record::Abort {
                    reason: e.to_string(),
                });
            }
            net.into_records()
        }
    };
    let x1 = FMatrix::from_rows(field, &[vec![1, 2]])?;
    let x2 = FMatrix::from_rows(field, &[vec![4, 0]])?;
    let mut out = Vec::new();
    for k in 2..=n {
        let fixed = fixed_for(Some(k));
        let obs = [Endpoint::Worker(k)];
        let (ra, rb) = (runner(x1.clone(), k), runner(x2.clone(), k));
        let a = enumerate_views(&ra, field, &fixed, &obs)?;
        let b = enumerate_views(&rb, field, &fixed, &obs)?;
        let draws = count_draws(&ra, &fixed);
        out.push(CaseLine {
            case: "evss".into(),
            observers: format!("w{k}"),
            finding: Finding::Exact {
                method: "enumerate",
                draws,
                tv: tv_distance(&a, &b),
            },
        });
    }
    Ok(out)
}

impl From<crate::gf::GfError> for AuditError {
    fn from(e: crate::gf::GfError) -> Self {
        AuditError::Protocol(e.into())
    }
}

fn sharing_case(name: &str, m: usize, leaky: bool) -> Result<Vec<CaseLine>, AuditError> {
    let mut tpl = Template::new(4, 1, m, 5, "SHARE A direct -> a")?;
    tpl.leaky = leaky;
    let a = vec![("A".to_string(), rows(&[&[1, 2]]))];
    let b = vec![("A".to_string(), rows(&[&[4, 0]]))];
    exact_case(name, &tpl, (a, b), observer_sets(4))
}

/// 1x1 operands: 1x2 operands need 5^14 honest coin tapes, beyond
/// [`MAX_STATES`].
fn mul_pairs() -> (Secrets, Secrets) {
    let a = vec![
        ("A".to_string(), rows(&[&[1]])),
        ("B".to_string(), rows(&[&[2]])),
    ];
    let b = vec![
        ("A".to_string(), rows(&[&[3]])),
        ("B".to_string(), rows(&[&[0]])),
    ];
    (a, b)
}

const MUL_PROGRAM: &str = "SHARE A direct -> a\nSHARE B reverse -> b\nMUL a b -> c\nREVEAL c";

fn master_case() -> Result<Vec<CaseLine>, AuditError> {
    let master = || vec![("master".to_string(), vec![Endpoint::Master], None)];
    let tpl = Template::new(
        3,
        1,
        1,
        5,
        "SHARE A direct -> a\nSHARE B direct -> b\nADD a b -> s\nREVEAL s",
    )?;
    let a = vec![
        ("A".to_string(), rows(&[&[1, 2]])),
        ("B".to_string(), rows(&[&[3, 4]])),
    ];
    let b = vec![
        ("A".to_string(), rows(&[&[0, 0]])),
        ("B".to_string(), rows(&[&[4, 1]])),
    ];
    exact_case("master", &tpl, (a, b), master())
}

fn mc_case(
    name: &str,
    samples: usize,
    seed: u64,
    leaky: bool,
) -> Result<Vec<CaseLine>, AuditError> {
    let field = Field::new(Field::DEFAULT_PRIME)?;
    let mut tpl = Template::new(5, 1, 2, field.modulus(), MUL_PROGRAM)?;
    tpl.leaky = leaky;
    let mut rng = derive_rng(seed, "mc/secrets");
    let mat = |rng: &mut rand_chacha::ChaCha12Rng| rng.matrix(field, 2, 2);
    let (a1, b1, a2) = (mat(&mut rng), mat(&mut rng), mat(&mut rng));
    let spec = |x: &FMatrix| InputSpec::Rows((0..x.rows()).map(|r| x.row(r).to_vec()).collect());
    let two = field.elem(2);
    let half = field.inv(two)?;
    let worker_pair = (
        vec![("A".to_string(), spec(&a1)), ("B".to_string(), spec(&b1))],
        vec![("A".to_string(), spec(&a2)), ("B".to_string(), spec(&b1))],
    );
    // equal products for the master: (2A)(B/2)ᵀ = ABᵀ
    let master_pair = (
        worker_pair.0.clone(),
        vec![
            ("A".to_string(), spec(&a1.scale(two))),
            ("B".to_string(), spec(&b1.scale(half))),
        ],
    );
    let mut out = Vec::new();
    for (label, obs, who, pair) in [
        (
            "w1".to_string(),
            vec![Endpoint::Worker(1)],
            Some(1),
            worker_pair,
        ),
        (
            "master".to_string(),
            vec![Endpoint::Master],
            None,
            master_pair,
        ),
    ] {
        let ra = tpl.runner(tpl.with(pair.0, who)?);
        let rb = tpl.runner(tpl.with(pair.1, who)?);
        let report = monte_carlo_audit(&ra, &rb, field, &obs, samples, seed)?;
        out.push(CaseLine {
            case: name.to_string(),
            observers: label,
            finding: Finding::Sampled(report),
        });
    }
    Ok(out)
}

/// Runs one named audit case.
pub fn run_case(name: &str, samples: usize, seed: u64) -> Result<Vec<CaseLine>, AuditError> {
    match name {
        "share-m1" => sharing_case(name, 1, false),
        "share-m2" => sharing_case(name, 2, false),
        "leak" => sharing_case(name, 1, true),
        "evss" => evss_case(),
        "mul" => {
            let tpl = Template::new(3, 1, 1, 5, MUL_PROGRAM)?;
            exact_case(name, &tpl, mul_pairs(), observer_sets(3))
        }
        "master" => master_case(),
        "mc" => mc_case(name, samples, seed, false),
        "mc-leak" => mc_case(name, samples, seed, true),
        other => Err(AuditError::UnknownCase(other.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(views: &[u8]) -> DistTable {
        let mut t = DistTable::new();
        for &v in views {
            t.add([v; 32]);
        }
        t
    }

    #[test]
    fn tv_basics() {
        assert_eq!(
            tv_distance(&table(&[1, 2]), &table(&[2, 1])),
            Ratio::from_integer(0)
        );
        assert_eq!(
            tv_distance(&table(&[1, 1]), &table(&[2])),
            Ratio::from_integer(1)
        );
        assert_eq!(
            tv_distance(&table(&[1, 2]), &table(&[1, 1])),
            Ratio::new(1, 2)
        );
    }

    #[test]
    fn grid_parsing() {
        assert!(parse_grid("").unwrap().is_empty());
        assert_eq!(parse_grid("all").unwrap().len(), DEFAULT_CASES.len());
        assert_eq!(parse_grid("case=evss;leak").unwrap(), vec!["evss", "leak"]);
        assert!(parse_grid("bogus").is_err());
    }

    #[test]
    fn single_share_view_is_uniform() {
        let lines = sharing_case("share-m1", 1, false).unwrap();
        assert_eq!(lines.len(), 4);
        assert!(lines.iter().all(|l| !l.leaks()));
    }

    #[test]
    fn planted_leak_is_detected() {
        let lines = sharing_case("leak", 1, true).unwrap();
        assert!(lines.iter().all(|l| l.leaks()));
    }
}

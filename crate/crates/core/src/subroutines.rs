//! Protocol building blocks on top of EVSS: multiplying held shares by a
//! public matrix, verified re-sharing of held shares (constant-term and
//! zero-gap checks), and joint evaluation of a shared polynomial.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::adversary::{DealPurpose, Step};
use crate::coins::{Actor, Randomness};
use crate::evss::{run_evss_batch, EvssJob};
use crate::gf::{FMatrix, Field};
use crate::net::{Endpoint, Mailbag, Network, Outgoing, Payload, ProtocolError};
use crate::poly::{lagrange_coeffs, MatPoly};
use crate::rscode::{decode, locate_errors, max_errors, ExponentSet, RsCode};
use crate::sharing::PartyId;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Reason {
    BadSubshareValue,
    BadGapForm,
    BadProductRelation,
    EvssRejectedDealer,
    /// Accused a product polynomial that passed joint re-evaluation.
    FalseComplaint,
}

impl Reason {
    pub const ALL: [Reason; 5] = [
        Reason::BadSubshareValue,
        Reason::BadGapForm,
        Reason::BadProductRelation,
        Reason::EvssRejectedDealer,
        Reason::FalseComplaint,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Reason::BadSubshareValue => "BadSubshareValue",
            Reason::BadGapForm => "BadGapForm",
            Reason::BadProductRelation => "BadProductRelation",
            Reason::EvssRejectedDealer => "EvssRejectedDealer",
            Reason::FalseComplaint => "FalseComplaint",
        }
    }
}

impl fmt::Display for Reason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Reason {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Reason::ALL
            .into_iter()
            .find(|r| r.name() == s)
            .ok_or_else(|| format!("unknown reason {s:?}"))
    }
}

/// Parties not yet caught cheating.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ActiveSet {
    active: BTreeSet<PartyId>,
    eliminated: BTreeMap<PartyId, Reason>,
}

impl ActiveSet {
    pub fn new(n: usize) -> Self {
        ActiveSet {
            active: (1..=n).collect(),
            eliminated: BTreeMap::new(),
        }
    }

    pub fn parties(&self) -> Vec<PartyId> {
        self.active.iter().copied().collect()
    }

    pub fn contains(&self, p: PartyId) -> bool {
        self.active.contains(&p)
    }

    pub fn len(&self) -> usize {
        self.active.len()
    }

    pub fn is_empty(&self) -> bool {
        self.active.is_empty()
    }

    pub fn eliminated(&self) -> &BTreeMap<PartyId, Reason> {
        &self.eliminated
    }

    /// Returns whether `p` was active.
    pub fn eliminate(&mut self, p: PartyId, reason: Reason) -> bool {
        if self.active.remove(&p) {
            self.eliminated.insert(p, reason);
            true
        } else {
            false
        }
    }
}

/// `held[holder][origin]`: the value `holder` received from `origin`.
pub type Held = BTreeMap<PartyId, BTreeMap<PartyId, FMatrix>>;

fn zeros(field: Field, shape: (usize, usize)) -> FMatrix {
    FMatrix::zeros(field, shape.0, shape.1)
}

fn apply(net: &mut Network, verdicts: BTreeMap<PartyId, Reason>, phase: &str) {
    for (p, r) in verdicts {
        net.eliminate(p, r, phase);
    }
}

// ---------------------------------------------------------------------------
// Shares times a public matrix

/// Computes `[v_1 .. v_k] · hpub`, where `v_i` is the constant term of a
/// polynomial of degree `qdeg` dealt by `positions[i]` and evaluated at every
/// holder.
pub struct MatrixJob<'a> {
    pub tag: String,
    pub positions: Vec<PartyId>,
    pub hpub: FMatrix,
    pub qdeg: usize,
    pub held: &'a Held,
    pub shape: (usize, usize),
}

/// Each active holder broadcasts its row of products; every column is then
/// decoded. Returns, per job, the agreed product entries.
pub fn shares_times_matrix(
    net: &mut Network,
    jobs: &[MatrixJob<'_>],
) -> Result<Vec<Vec<FMatrix>>, ProtocolError> {
    let field = net.field();
    let holders = net.active_parties();
    for &h in &holders {
        let mut out = Vec::new();
        for job in jobs {
            let mine = job.held.get(&h);
            let row = (0..job.hpub.cols())
                .map(|r| {
                    let mut acc = zeros(field, job.shape);
                    for (i, o) in job.positions.iter().enumerate() {
                        if let Some(v) = mine.and_then(|m| m.get(o)) {
                            acc.add_scaled(v, job.hpub.get(i, r));
                        }
                    }
                    acc
                })
                .collect();
            out.push(Outgoing::new(
                Endpoint::All,
                job.tag.clone(),
                Payload::Row(row),
            ));
        }
        net.post(Endpoint::Worker(h), Step::Rows, out);
    }
    let bag = net.deliver();
    let alphas = net.alphas(&holders);
    jobs.iter()
        .map(|job| {
            let cols = job.hpub.cols();
            let rows: Vec<Vec<FMatrix>> = holders
                .iter()
                .map(|&h| {
                    bag.tagged(&job.tag)
                        .find(|e| e.from == Endpoint::Worker(h) && e.is_broadcast())
                        .and_then(|e| match &e.payload {
                            Payload::Row(vs)
                                if vs.len() == cols
                                    && vs.iter().all(|v| v.shape() == job.shape) =>
                            {
                                Some(vs.clone())
                            }
                            _ => None,
                        })
                        .unwrap_or_else(|| vec![zeros(field, job.shape); cols])
                })
                .collect();
            let budget = max_errors(holders.len(), job.qdeg);
            (0..cols)
                .map(|r| {
                    let word: Vec<FMatrix> = rows.iter().map(|row| row[r].clone()).collect();
                    decode(field, job.qdeg, &alphas, &word, budget)
                        .map(|d| d.poly.coeff(0))
                        .map_err(|e| ProtocolError::decoding(&job.tag, e))
                })
                .collect()
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Verified subsharing

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    /// Values travel over private links with no verification.
    Plain,
    /// Dealing through EVSS plus constant-term and gap checks.
    Robust,
}

/// Re-share of per-party values `values[o]`, which are evaluations of one
/// polynomial of degree `src_deg`. Each origin deals
/// `v_o + R_1 x^(delta+1) + ... + R_t x^(delta+t)`.
#[derive(Clone, Debug)]
pub struct SubshareJob {
    pub name: String,
    pub values: BTreeMap<PartyId, FMatrix>,
    pub src_deg: usize,
    pub delta: usize,
    pub shape: (usize, usize),
}

#[derive(Clone, Debug)]
pub struct Subshared {
    pub name: String,
    pub delta: usize,
    /// Surviving origins.
    pub origins: Vec<PartyId>,
    pub held: Held,
    /// The polynomial each origin dealt, as that origin knows it.
    pub dealt: BTreeMap<PartyId, MatPoly>,
}

impl Subshared {
    /// Values held by `h` from the surviving origins, in origin order.
    pub fn column(&self, h: PartyId) -> Vec<Option<&FMatrix>> {
        self.origins
            .iter()
            .map(|o| self.held.get(&h).and_then(|m| m.get(o)))
            .collect()
    }

    /// Holder values of origin `o`'s polynomial.
    pub fn of_origin(&self, o: PartyId) -> BTreeMap<PartyId, FMatrix> {
        self.held
            .iter()
            .filter_map(|(&h, m)| m.get(&o).map(|v| (h, v.clone())))
            .collect()
    }
}

/// Masked re-share polynomial with `delta` zero coefficients after the
/// constant term and `t` uniform coefficients above.
pub fn subshare_poly(v: &FMatrix, delta: usize, t: usize, rng: &mut dyn Randomness) -> MatPoly {
    let field = v.field();
    let (r, c) = v.shape();
    let mut coeffs = vec![v.clone()];
    coeffs.extend((0..delta).map(|_| FMatrix::zeros(field, r, c)));
    coeffs.extend((0..t).map(|_| rng.matrix(field, r, c)));
    MatPoly::new(field, r, c, coeffs).expect("common shape")
}

fn origin_polys(
    net: &mut Network,
    job: &SubshareJob,
    active: &[PartyId],
) -> BTreeMap<PartyId, MatPoly> {
    let t = net.t();
    let field = net.field();
    let label = format!("{}/q", job.name);
    active
        .iter()
        .map(|&o| {
            let v = job
                .values
                .get(&o)
                .cloned()
                .unwrap_or_else(|| zeros(field, job.shape));
            let q = subshare_poly(&v, job.delta, t, &mut net.stream(Actor::Worker(o), &label));
            (
                o,
                net.tamper(o, DealPurpose::Subshare { delta: job.delta }, q),
            )
        })
        .collect()
}

/// Re-shares every job's values. In robust mode cheating origins are
/// eliminated before returning.
pub fn subshare(
    net: &mut Network,
    mode: Mode,
    jobs: &[SubshareJob],
) -> Result<Vec<Subshared>, ProtocolError> {
    match mode {
        Mode::Plain => subshare_plain(net, jobs),
        Mode::Robust => subshare_robust(net, jobs),
    }
}

fn subshare_plain(
    net: &mut Network,
    jobs: &[SubshareJob],
) -> Result<Vec<Subshared>, ProtocolError> {
    let field = net.field();
    let active = net.active_parties();
    let dealt: Vec<BTreeMap<PartyId, MatPoly>> =
        jobs.iter().map(|j| origin_polys(net, j, &active)).collect();
    for &o in &active {
        let mut out = Vec::new();
        for (job, polys) in jobs.iter().zip(&dealt) {
            for &h in &active {
                out.push(Outgoing::new(
                    Endpoint::Worker(h),
                    job.name.clone(),
                    Payload::Value(polys[&o].eval(net.alpha(h))),
                ));
            }
        }
        net.post(Endpoint::Worker(o), Step::PlainValues, out);
    }
    let bag = net.deliver();
    Ok(jobs
        .iter()
        .zip(dealt)
        .map(|(job, dealt)| {
            let held = active
                .iter()
                .map(|&h| {
                    let col = active
                        .iter()
                        .map(|&o| {
                            let v = bag
                                .value_from(
                                    &job.name,
                                    Endpoint::Worker(o),
                                    Endpoint::Worker(h),
                                    job.shape,
                                )
                                .cloned()
                                .unwrap_or_else(|| zeros(field, job.shape));
                            (o, v)
                        })
                        .collect();
                    (h, col)
                })
                .collect();
            Subshared {
                name: job.name.clone(),
                delta: job.delta,
                origins: active.clone(),
                held,
                dealt,
            }
        })
        .collect())
}

fn deal_tag(job: &str, o: PartyId) -> String {
    format!("{job}/o{o}")
}

fn subshare_robust(
    net: &mut Network,
    jobs: &[SubshareJob],
) -> Result<Vec<Subshared>, ProtocolError> {
    let t = net.t();
    let active = net.active_parties();
    let mut dealt = Vec::new();
    let mut evss_jobs = Vec::new();
    for job in jobs {
        let polys = origin_polys(net, job, &active);
        for (&o, q) in &polys {
            evss_jobs.push(EvssJob {
                tag: deal_tag(&job.name, o),
                dealer: o,
                poly: q.clone(),
                degree: job.delta + t,
            });
        }
        dealt.push(polys);
    }
    let outcomes = run_evss_batch(net, evss_jobs)?;
    let mut rejected = BTreeMap::new();
    let mut results: Vec<Subshared> = Vec::new();
    let mut it = outcomes.into_iter();
    for (job, dealt) in jobs.iter().zip(dealt) {
        let mut held: Held = BTreeMap::new();
        let mut origins = Vec::new();
        for &o in &active {
            let out = it.next().expect("one outcome per origin");
            if !out.accepted {
                rejected.insert(o, Reason::EvssRejectedDealer);
                continue;
            }
            origins.push(o);
            for (h, v) in out.shares {
                held.entry(h).or_default().insert(o, v);
            }
        }
        results.push(Subshared {
            name: job.name.clone(),
            delta: job.delta,
            origins,
            held,
            dealt,
        });
    }
    apply(net, rejected, "subshare-deal");

    let bad = check_constants(net, &results, jobs)?;
    apply(net, bad, "subshare-constant");

    let gapped: Vec<usize> = (0..jobs.len()).filter(|&i| jobs[i].delta >= 1).collect();
    if !gapped.is_empty() {
        let refs: Vec<&Subshared> = gapped.iter().map(|&i| &results[i]).collect();
        let shapes: Vec<(usize, usize)> = gapped.iter().map(|&i| jobs[i].shape).collect();
        check_gaps(net, &refs, &shapes)?;
    }

    for r in &mut results {
        prune(net, r);
    }
    Ok(results)
}

fn prune(net: &Network, s: &mut Subshared) {
    let active = net.active();
    s.origins.retain(|&o| active.contains(o));
    s.held.retain(|&h, _| active.contains(h));
    for m in s.held.values_mut() {
        m.retain(|&o, _| active.contains(o));
    }
}

/// Checks that the origins' constant terms lie on a polynomial of degree
/// `src_deg`, locating the origins that lied.
fn check_constants(
    net: &mut Network,
    results: &[Subshared],
    jobs: &[SubshareJob],
) -> Result<BTreeMap<PartyId, Reason>, ProtocolError> {
    let field = net.field();
    let t = net.t();
    let mut codes = Vec::new();
    let mut mjobs = Vec::new();
    for (res, job) in results.iter().zip(jobs) {
        let src_deg = &job.src_deg;
        let origins: Vec<PartyId> = res
            .origins
            .iter()
            .copied()
            .filter(|&o| net.active().contains(o))
            .collect();
        let code = RsCode::build(
            field,
            &net.alphas(&origins),
            ExponentSet::contiguous(*src_deg),
        )?;
        if code.parity_check().rows() == 0 {
            return Err(ProtocolError::ParameterViolation(format!(
                "{} origins leave no redundancy for degree {src_deg}",
                origins.len()
            )));
        }
        mjobs.push(MatrixJob {
            tag: format!("{}/syn", res.name),
            positions: origins.clone(),
            hpub: code.parity_check().transpose(),
            qdeg: job.delta + t,
            held: &res.held,
            shape: job.shape,
        });
        codes.push((code, origins, *src_deg));
    }
    let syndromes = shares_times_matrix(net, &mjobs)?;
    let mut bad = BTreeMap::new();
    for ((code, origins, src_deg), s) in codes.iter().zip(syndromes) {
        if s.iter().all(|m| m.is_zero()) {
            continue;
        }
        let d = locate_errors(code, *src_deg, &s, max_errors(origins.len(), *src_deg))
            .map_err(|e| ProtocolError::decoding("subshare-constant", e))?;
        for i in d.errors {
            bad.insert(origins[i], Reason::BadSubshareValue);
        }
    }
    Ok(bad)
}

/// Verifies that every origin's re-share polynomial has zero coefficients
/// at powers `1..=delta`. Each holder re-shares the value it received so
/// the parity check of the gapped code can be evaluated jointly.
fn check_gaps(
    net: &mut Network,
    results: &[&Subshared],
    shapes: &[(usize, usize)],
) -> Result<(), ProtocolError> {
    let field = net.field();
    let t = net.t();
    let holders = net.active_parties();
    let mut evss_jobs = Vec::new();
    let mut index = Vec::new();
    for (res, shape) in results.iter().zip(shapes) {
        for &o in &res.origins {
            if !net.active().contains(o) {
                continue;
            }
            for &h in &holders {
                let v = res
                    .held
                    .get(&h)
                    .and_then(|m| m.get(&o))
                    .cloned()
                    .unwrap_or_else(|| zeros(field, *shape));
                let label = format!("{}/gap/o{o}", res.name);
                let p = subshare_poly(&v, 0, t, &mut net.stream(Actor::Worker(h), &label));
                let p = net.tamper(h, DealPurpose::GapCheck, p);
                evss_jobs.push(EvssJob {
                    tag: format!("{}/gap/o{o}/h{h}", res.name),
                    dealer: h,
                    poly: p,
                    degree: t,
                });
                index.push((res.name.clone(), o, h));
            }
        }
    }
    let outcomes = run_evss_batch(net, evss_jobs)?;
    let mut rejected = BTreeMap::new();
    // second[(job, origin)][holder'][holder] = share of holder's re-share
    let mut second: BTreeMap<(String, PartyId), Held> = BTreeMap::new();
    for ((name, o, h), out) in index.into_iter().zip(outcomes) {
        let entry = second.entry((name, o)).or_default();
        if !out.accepted {
            rejected.insert(h, Reason::EvssRejectedDealer);
            continue;
        }
        for (h2, v) in out.shares {
            entry.entry(h2).or_default().insert(h, v);
        }
    }
    apply(net, rejected, "gap-deal");

    let positions: Vec<PartyId> = net.active_parties();
    let alphas = net.alphas(&positions);
    let mut plan = Vec::new();
    for (res, shape) in results.iter().zip(shapes) {
        let zeta = res.delta + 1;
        let code = RsCode::build(field, &alphas, ExponentSet::gapped(zeta, t))?;
        for &o in &res.origins {
            if net.active().contains(o) {
                plan.push((res.name.clone(), o, zeta, code.clone(), *shape));
            }
        }
    }
    let empty = Held::new();
    let mjobs: Vec<MatrixJob<'_>> = plan
        .iter()
        .map(|(name, o, _, code, shape)| MatrixJob {
            tag: format!("{name}/gapsyn/o{o}"),
            positions: positions.clone(),
            hpub: code.parity_check().transpose(),
            qdeg: t,
            held: second.get(&(name.clone(), *o)).unwrap_or(&empty),
            shape: *shape,
        })
        .collect();
    let syndromes = shares_times_matrix(net, &mjobs)?;
    let mut bad = BTreeMap::new();
    for ((_, o, zeta, code, _), s) in plan.iter().zip(syndromes) {
        if s.iter().all(|m| m.is_zero()) {
            continue;
        }
        let full = zeta + t - 1;
        let w = code.preimage(&s)?;
        match decode(
            field,
            full,
            code.alphas(),
            &w,
            max_errors(positions.len(), full),
        ) {
            Err(_) => {
                bad.insert(*o, Reason::BadGapForm);
            }
            Ok(d) => {
                if (1..*zeta).any(|k| !d.poly.coeff(k).is_zero()) {
                    bad.insert(*o, Reason::BadGapForm);
                } else {
                    for i in d.errors {
                        bad.entry(positions[i]).or_insert(Reason::BadSubshareValue);
                    }
                }
            }
        }
    }
    apply(net, bad, "subshare-gap");
    Ok(())
}

// ---------------------------------------------------------------------------
// Joint evaluation

/// Evaluates at `target` the polynomial of degree `deg` whose value at
/// `α_h` is held by `h`.
#[derive(Clone, Debug)]
pub struct EvalJob {
    pub name: String,
    pub held: BTreeMap<PartyId, FMatrix>,
    pub deg: usize,
    pub target: u64,
    pub shape: (usize, usize),
}

pub fn eval_shared(net: &mut Network, jobs: &[EvalJob]) -> Result<Vec<FMatrix>, ProtocolError> {
    let field = net.field();
    let t = net.t();
    let sub_jobs: Vec<SubshareJob> = jobs
        .iter()
        .map(|j| SubshareJob {
            name: format!("{}/sub", j.name),
            values: j.held.clone(),
            src_deg: j.deg,
            delta: 0,
            shape: j.shape,
        })
        .collect();
    let subs = subshare(net, Mode::Robust, &sub_jobs)?;
    let active = net.active_parties();
    let mut weights = Vec::new();
    for (job, sub) in jobs.iter().zip(&subs) {
        if sub.origins.len() < job.deg + 1 {
            return Err(ProtocolError::TooFewSurvivors {
                have: sub.origins.len(),
                need: job.deg + 1,
            });
        }
        weights.push(lagrange_coeffs(
            field,
            &net.alphas(&sub.origins),
            job.target,
        )?);
    }
    for &h in &active {
        let out = jobs
            .iter()
            .zip(&subs)
            .zip(&weights)
            .map(|((job, sub), w)| {
                let mut acc = zeros(field, job.shape);
                for (v, &c) in sub.column(h).into_iter().zip(w) {
                    if let Some(v) = v {
                        acc.add_scaled(v, c);
                    }
                }
                Outgoing::new(
                    Endpoint::All,
                    format!("{}/pt", job.name),
                    Payload::Value(acc),
                )
            })
            .collect();
        net.post(Endpoint::Worker(h), Step::Points, out);
    }
    let bag = net.deliver();
    let alphas = net.alphas(&active);
    jobs.iter()
        .map(|job| {
            let word = broadcast_word(&bag, &format!("{}/pt", job.name), &active, job.shape, field);
            decode(field, t, &alphas, &word, max_errors(active.len(), t))
                .map(|d| d.poly.coeff(0))
                .map_err(|e| ProtocolError::decoding(&job.name, e))
        })
        .collect()
}

/// Broadcast values of `senders` under `tag`, zero where missing.
pub fn broadcast_word(
    bag: &Mailbag,
    tag: &str,
    senders: &[PartyId],
    shape: (usize, usize),
    field: Field,
) -> Vec<FMatrix> {
    senders
        .iter()
        .map(|&p| {
            bag.value_from(tag, Endpoint::Worker(p), Endpoint::All, shape)
                .cloned()
                .unwrap_or_else(|| zeros(field, shape))
        })
        .collect()
}

//! Verifiable dealing of a matrix polynomial through a bivariate embedding,
//! run as a five-round per-party state machine: deal, exchange cross points,
//! complain, resolve by public reveal, vote.

use std::collections::{BTreeMap, BTreeSet};

use crate::adversary::Step;
use crate::coins::{Actor, Randomness};
use crate::gf::{FMatrix, Field};
use crate::net::{Endpoint, Envelope, Network, Outgoing, Payload, ProtocolError, Record};
use crate::poly::{BiMatPoly, MatPoly};
use crate::sharing::{make_share_poly, PartyId, ShareLabel};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EvssMsg {
    /// Private, dealer to party `i`: `f_i(x) = S(x, α_i)`, `g_i(y) = S(α_i, y)`.
    Deal {
        f: MatPoly,
        g: MatPoly,
    },
    /// Private, party `i` to party `j`: `(f_i(α_j), g_i(α_j))`.
    Cross {
        f_at: FMatrix,
        g_at: FMatrix,
    },
    /// Broadcast by the complainer: its own `(f(α_accused), g(α_accused))`,
    /// or `None` when it holds no usable polynomials.
    Complaint {
        accused: PartyId,
        values: Option<(FMatrix, FMatrix)>,
    },
    /// Broadcast by the dealer.
    Reveal {
        target: PartyId,
        f: MatPoly,
        g: MatPoly,
    },
    Consistent,
}

impl EvssMsg {
    pub fn kind(&self) -> &'static str {
        match self {
            EvssMsg::Deal { .. } => "deal",
            EvssMsg::Cross { .. } => "cross",
            EvssMsg::Complaint { .. } => "complaint",
            EvssMsg::Reveal { .. } => "reveal",
            EvssMsg::Consistent => "consistent",
        }
    }

    pub(crate) fn rank(&self) -> u8 {
        match self {
            EvssMsg::Deal { .. } => 0,
            EvssMsg::Cross { .. } => 1,
            EvssMsg::Complaint { .. } => 2,
            EvssMsg::Reveal { .. } => 3,
            EvssMsg::Consistent => 4,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EvssDeal {
    pub s: BiMatPoly,
    pub label: ShareLabel,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EvssVerdict {
    Accepted(FMatrix),
    Rejected,
}

/// Bivariate polynomial of degree `degree` in each variable with
/// `S(0, y) = q(y)`; every other coefficient is uniform.
pub fn embed(
    q: &MatPoly,
    degree: usize,
    rng: &mut dyn Randomness,
) -> Result<BiMatPoly, ProtocolError> {
    if q.len() > degree + 1 {
        return Err(ProtocolError::ParameterViolation(format!(
            "polynomial of length {} exceeds degree {degree}",
            q.len()
        )));
    }
    let field = q.field();
    let (r, c) = q.shape();
    let grid = (0..=degree)
        .map(|i| {
            (0..=degree)
                .map(|j| {
                    if i == 0 {
                        q.coeff(j)
                    } else {
                        rng.matrix(field, r, c)
                    }
                })
                .collect()
        })
        .collect();
    Ok(BiMatPoly::new(grid)?)
}

/// Deals `w` under `label` among `n` parties with collusion bound `t`.
pub fn evss_deal(
    w: &FMatrix,
    label: ShareLabel,
    n: usize,
    rng: &mut dyn Randomness,
) -> Result<EvssDeal, ProtocolError> {
    if n < 3 * label.t + label.m {
        return Err(ProtocolError::ParameterViolation(format!(
            "{n} parties cannot deal with t={} and m={}",
            label.t, label.m
        )));
    }
    let q = make_share_poly(w, label, rng)?;
    Ok(EvssDeal {
        s: embed(&q, label.degree(), rng)?,
        label,
    })
}

#[derive(Clone, Debug)]
struct Complaint {
    from: PartyId,
    accused: PartyId,
    values: Option<(FMatrix, FMatrix)>,
}

/// One party's view of one dealing.
#[derive(Clone, Debug)]
pub struct EvssParty {
    me: PartyId,
    dealer: PartyId,
    participants: Vec<PartyId>,
    degree: usize,
    shape: (usize, usize),
    field: Field,
    threshold: usize,
    deal: Option<BiMatPoly>,
    polys: Option<(MatPoly, MatPoly)>,
    cross: BTreeMap<PartyId, (FMatrix, FMatrix)>,
    complaints: Vec<Complaint>,
    reveals: BTreeMap<PartyId, (MatPoly, MatPoly)>,
    bad_reveal: bool,
    voting: bool,
}

impl EvssParty {
    /// `deal` is `Some` only at the dealer. `threshold` is the number of
    /// Consistent votes needed to accept.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        field: Field,
        me: PartyId,
        dealer: PartyId,
        participants: Vec<PartyId>,
        degree: usize,
        shape: (usize, usize),
        threshold: usize,
        deal: Option<BiMatPoly>,
    ) -> Self {
        EvssParty {
            me,
            dealer,
            participants,
            degree,
            shape,
            field,
            threshold,
            deal,
            polys: None,
            cross: BTreeMap::new(),
            complaints: Vec::new(),
            reveals: BTreeMap::new(),
            bad_reveal: false,
            voting: false,
        }
    }

    fn alpha(&self, p: PartyId) -> u64 {
        self.field.alpha(p)
    }

    fn valid_poly(&self, p: &MatPoly) -> bool {
        p.shape() == self.shape && p.len() <= self.degree + 1
    }

    fn valid_value(&self, v: &FMatrix) -> bool {
        v.shape() == self.shape
    }

    fn others(&self) -> impl Iterator<Item = PartyId> + '_ {
        self.participants
            .iter()
            .copied()
            .filter(move |&p| p != self.me)
    }

    /// Advances to `round` (1..=5) given the messages delivered at the end of
    /// the previous round, returning this party's messages for the round.
    pub fn step(&mut self, round: u8, inbox: &[&Envelope]) -> Vec<(Endpoint, EvssMsg)> {
        match round {
            1 => self.send_deals(),
            2 => {
                self.take_deal(inbox);
                self.send_cross()
            }
            3 => {
                self.take_cross(inbox);
                self.complain()
            }
            4 => {
                self.take_complaints(inbox);
                self.resolve()
            }
            5 => {
                self.take_reveals(inbox);
                self.vote()
            }
            _ => Vec::new(),
        }
    }

    fn send_deals(&self) -> Vec<(Endpoint, EvssMsg)> {
        let Some(s) = &self.deal else {
            return Vec::new();
        };
        self.participants
            .iter()
            .map(|&p| {
                let a = self.alpha(p);
                (
                    Endpoint::Worker(p),
                    EvssMsg::Deal {
                        f: s.fix_y(a),
                        g: s.fix_x(a),
                    },
                )
            })
            .collect()
    }

    fn take_deal(&mut self, inbox: &[&Envelope]) {
        let dealer = Endpoint::Worker(self.dealer);
        let got = inbox.iter().find_map(|e| match &e.payload {
            Payload::Evss(EvssMsg::Deal { f, g })
                if e.from == dealer && e.to == Endpoint::Worker(self.me) =>
            {
                Some((f, g))
            }
            _ => None,
        });
        if let Some((f, g)) = got {
            if self.valid_poly(f) && self.valid_poly(g) {
                self.polys = Some((f.clone(), g.clone()));
            }
        }
    }

    fn send_cross(&self) -> Vec<(Endpoint, EvssMsg)> {
        let Some((f, g)) = &self.polys else {
            return Vec::new();
        };
        self.others()
            .map(|j| {
                let a = self.alpha(j);
                (
                    Endpoint::Worker(j),
                    EvssMsg::Cross {
                        f_at: f.eval(a),
                        g_at: g.eval(a),
                    },
                )
            })
            .collect()
    }

    fn take_cross(&mut self, inbox: &[&Envelope]) {
        let me = Endpoint::Worker(self.me);
        for e in inbox {
            let (Endpoint::Worker(from), true) = (e.from, e.to == me) else {
                continue;
            };
            if from == self.me
                || !self.participants.contains(&from)
                || self.cross.contains_key(&from)
            {
                continue;
            }
            if let Payload::Evss(EvssMsg::Cross { f_at, g_at }) = &e.payload {
                if self.valid_value(f_at) && self.valid_value(g_at) {
                    self.cross.insert(from, (f_at.clone(), g_at.clone()));
                }
            }
        }
    }

    /// Values party `j` should have sent us: `(g(α_j), f(α_j))`.
    fn expected_from(&self, j: PartyId) -> Option<(FMatrix, FMatrix)> {
        let (f, g) = self.polys.as_ref()?;
        let a = self.alpha(j);
        Some((g.eval(a), f.eval(a)))
    }

    fn complain(&self) -> Vec<(Endpoint, EvssMsg)> {
        let others: Vec<PartyId> = self.others().collect();
        match &self.polys {
            None => others
                .into_iter()
                .map(|j| {
                    (
                        Endpoint::All,
                        EvssMsg::Complaint {
                            accused: j,
                            values: None,
                        },
                    )
                })
                .collect(),
            Some((f, g)) => others
                .into_iter()
                .filter(|j| self.cross.get(j) != self.expected_from(*j).as_ref())
                .map(|j| {
                    let a = self.alpha(j);
                    (
                        Endpoint::All,
                        EvssMsg::Complaint {
                            accused: j,
                            values: Some((f.eval(a), g.eval(a))),
                        },
                    )
                })
                .collect(),
        }
    }

    fn take_complaints(&mut self, inbox: &[&Envelope]) {
        let mut seen = BTreeSet::new();
        for e in inbox {
            let Endpoint::Worker(from) = e.from else {
                continue;
            };
            if !e.is_broadcast() || !self.participants.contains(&from) {
                continue;
            }
            if let Payload::Evss(EvssMsg::Complaint { accused, values }) = &e.payload {
                if *accused == from
                    || !self.participants.contains(accused)
                    || !seen.insert((from, *accused))
                {
                    continue;
                }
                let values = values
                    .as_ref()
                    .filter(|(u, v)| self.valid_value(u) && self.valid_value(v))
                    .cloned();
                self.complaints.push(Complaint {
                    from,
                    accused: *accused,
                    values,
                });
            }
        }
    }

    fn resolve(&self) -> Vec<(Endpoint, EvssMsg)> {
        let Some(s) = &self.deal else {
            return Vec::new();
        };
        let mut targets = BTreeSet::new();
        for c in &self.complaints {
            let (ai, aj) = (self.alpha(c.from), self.alpha(c.accused));
            let correct = match &c.values {
                Some((u, v)) => *u == s.eval(aj, ai) && *v == s.eval(ai, aj),
                None => false,
            };
            if !correct {
                targets.insert(c.from);
            }
        }
        targets
            .into_iter()
            .map(|i| {
                let a = self.alpha(i);
                (
                    Endpoint::All,
                    EvssMsg::Reveal {
                        target: i,
                        f: s.fix_y(a),
                        g: s.fix_x(a),
                    },
                )
            })
            .collect()
    }

    fn take_reveals(&mut self, inbox: &[&Envelope]) {
        for e in inbox {
            if e.from != Endpoint::Worker(self.dealer) || !e.is_broadcast() {
                continue;
            }
            if let Payload::Evss(EvssMsg::Reveal { target, f, g }) = &e.payload {
                if !self.participants.contains(target) || self.reveals.contains_key(target) {
                    continue;
                }
                if self.valid_poly(f) && self.valid_poly(g) {
                    self.reveals.insert(*target, (f.clone(), g.clone()));
                } else {
                    self.bad_reveal = true;
                }
            }
        }
        self.voting = !self.complaints.is_empty() || !self.reveals.is_empty() || self.bad_reveal;
        if let Some(own) = self.reveals.get(&self.me) {
            self.polys = Some(own.clone());
        }
    }

    /// A complaint's values after replacing the complainer's polynomials by
    /// the revealed ones, if any.
    fn effective(&self, c: &Complaint) -> Option<(FMatrix, FMatrix)> {
        match self.reveals.get(&c.from) {
            Some((f, g)) => {
                let a = self.alpha(c.accused);
                Some((f.eval(a), g.eval(a)))
            }
            None => c.values.clone(),
        }
    }

    fn consistent(&self) -> bool {
        let Some((f, g)) = &self.polys else {
            return false;
        };
        if self.bad_reveal {
            return false;
        }
        let mut eff = BTreeMap::new();
        for c in &self.complaints {
            let Some(v) = self.effective(c) else {
                return false;
            };
            if c.accused == self.me && Some(&v) != self.expected_from(c.from).as_ref() {
                return false;
            }
            eff.insert((c.from, c.accused), v);
        }
        for (&(i, j), (a, b)) in &eff {
            if let Some((c, d)) = eff.get(&(j, i)) {
                if a != d || b != c {
                    return false;
                }
            }
        }
        let me = self.alpha(self.me);
        for (&i, (fi, gi)) in &self.reveals {
            if i == self.me {
                continue;
            }
            let ai = self.alpha(i);
            if fi.eval(me) != g.eval(ai) || gi.eval(me) != f.eval(ai) {
                return false;
            }
        }
        if self.reveals.contains_key(&self.me) {
            for (j, v) in &self.cross {
                if !self.reveals.contains_key(j) && Some(v) != self.expected_from(*j).as_ref() {
                    return false;
                }
            }
        }
        true
    }

    fn vote(&self) -> Vec<(Endpoint, EvssMsg)> {
        if self.voting && self.consistent() {
            vec![(Endpoint::All, EvssMsg::Consistent)]
        } else {
            Vec::new()
        }
    }

    /// Verdict from the votes broadcast in round 5.
    pub fn finalize(&self, inbox: &[&Envelope]) -> EvssVerdict {
        let share = || match &self.polys {
            Some((f, _)) => EvssVerdict::Accepted(f.eval(0)),
            None => EvssVerdict::Rejected,
        };
        if !self.voting {
            return share();
        }
        let voters: BTreeSet<PartyId> = inbox
            .iter()
            .filter(|e| e.is_broadcast() && matches!(e.payload, Payload::Evss(EvssMsg::Consistent)))
            .filter_map(|e| match e.from {
                Endpoint::Worker(p) if self.participants.contains(&p) => Some(p),
                _ => None,
            })
            .collect();
        if voters.len() >= self.threshold {
            share()
        } else {
            EvssVerdict::Rejected
        }
    }
}

/// One dealing to run in a batch.
#[derive(Clone, Debug)]
pub struct EvssJob {
    pub tag: String,
    pub dealer: PartyId,
    pub poly: MatPoly,
    pub degree: usize,
}

#[derive(Clone, Debug)]
pub struct EvssOutcome {
    pub tag: String,
    pub dealer: PartyId,
    pub accepted: bool,
    /// Accepted shares of every participant, adversarial ones included.
    pub shares: BTreeMap<PartyId, FMatrix>,
}

/// Runs a batch of dealings among the currently active parties; all
/// instances share the same five rounds. The decision of each instance is
/// the honest parties' common verdict.
pub fn run_evss_batch(
    net: &mut Network,
    jobs: Vec<EvssJob>,
) -> Result<Vec<EvssOutcome>, ProtocolError> {
    let field = net.field();
    let participants = net.active_parties();
    let threshold = net.n() - net.t();
    let mut states: Vec<BTreeMap<PartyId, EvssParty>> = Vec::with_capacity(jobs.len());
    for job in &jobs {
        if !participants.contains(&job.dealer) {
            return Err(ProtocolError::Internal(format!(
                "inactive dealer {} for {}",
                job.dealer, job.tag
            )));
        }
        let label = format!("{}/S", job.tag);
        let s = embed(
            &job.poly,
            job.degree,
            &mut net.stream(Actor::Worker(job.dealer), &label),
        )?;
        let shape = job.poly.shape();
        let per = participants
            .iter()
            .map(|&p| {
                let deal = (p == job.dealer).then(|| s.clone());
                let st = EvssParty::new(
                    field,
                    p,
                    job.dealer,
                    participants.clone(),
                    job.degree,
                    shape,
                    threshold,
                    deal,
                );
                (p, st)
            })
            .collect();
        states.push(per);
    }
    let instances: Vec<(String, PartyId, (usize, usize))> = jobs
        .iter()
        .map(|j| (j.tag.clone(), j.dealer, j.poly.shape()))
        .collect();

    let mut bag: Option<crate::net::Mailbag> = None;
    for round in 1..=5u8 {
        for &p in &participants {
            let mut out = Vec::new();
            for (job, per) in jobs.iter().zip(states.iter_mut()) {
                let inbox = match &bag {
                    Some(b) => b.inbox(&job.tag, Endpoint::Worker(p)),
                    None => Vec::new(),
                };
                let st = per.get_mut(&p).expect("participant state");
                out.extend(
                    st.step(round, &inbox)
                        .into_iter()
                        .map(|(to, msg)| Outgoing::new(to, job.tag.clone(), Payload::Evss(msg))),
                );
            }
            let step = match round {
                1 => Step::EvssDeal,
                2 => Step::EvssExchange,
                3 => Step::EvssComplain {
                    instances: &instances,
                    participants: &participants,
                },
                4 => Step::EvssResolve,
                _ => Step::EvssVote,
            };
            net.post(Endpoint::Worker(p), step, out);
        }
        bag = Some(net.deliver());
    }
    let bag = bag.expect("five rounds delivered");

    let mut outcomes = Vec::with_capacity(jobs.len());
    for (job, per) in jobs.iter().zip(states.iter()) {
        let mut shares = BTreeMap::new();
        let mut honest = Vec::new();
        for (&p, st) in per {
            let verdict = st.finalize(&bag.inbox(&job.tag, Endpoint::Worker(p)));
            let ok = matches!(verdict, EvssVerdict::Accepted(_));
            if net.is_honest(p) {
                honest.push(ok);
            }
            if let EvssVerdict::Accepted(v) = verdict {
                shares.insert(p, v);
            }
        }
        let accepted = honest.iter().all(|&x| x);
        let unanimous = honest.iter().all(|&x| x == accepted);
        net.record(Record::Verdict {
            tag: job.tag.clone(),
            dealer: job.dealer,
            accepted,
            unanimous,
        });
        outcomes.push(EvssOutcome {
            tag: job.tag.clone(),
            dealer: job.dealer,
            accepted,
            shares,
        });
    }
    Ok(outcomes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sharing::Direction;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn deal_structure() {
        let f = Field::new(11).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let w = FMatrix::scalar(f, 7);
        let d = evss_deal(&w, ShareLabel::new(1, 1, 0, Direction::Direct), 4, &mut rng).unwrap();
        assert_eq!(d.s.degree(), 1);
        assert_eq!(d.s.eval(0, 0), w);
        let g = evss_deal(&w, ShareLabel::new(1, 1, 1, Direction::Direct), 4, &mut rng).unwrap();
        assert!(g.s.coeff(0, 1).is_zero());
        assert!(evss_deal(&w, ShareLabel::new(1, 1, 0, Direction::Direct), 3, &mut rng).is_err());
    }
}

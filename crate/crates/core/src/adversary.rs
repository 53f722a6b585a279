//! Adversary strategies. A corrupted worker runs the honest code; its
//! outgoing messages then pass through [`adversary_act`], and polynomials it
//! deals pass through [`tamper_poly`].

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::coins::Randomness;
use crate::evss::EvssMsg;
use crate::gf::{FMatrix, Field};
use crate::net::{Endpoint, Envelope, Outgoing, Payload, Record};
use crate::poly::MatPoly;
use crate::sharing::PartyId;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Strategy {
    SemiHonest,
    InconsistentEvssDealer,
    WrongSubshareConstant,
    BadGapCoefficient,
    CorruptProductPoly,
    FalseComplainer,
    RandomByzantine,
    Silent,
}

impl Strategy {
    pub const ALL: [Strategy; 8] = [
        Strategy::SemiHonest,
        Strategy::InconsistentEvssDealer,
        Strategy::WrongSubshareConstant,
        Strategy::BadGapCoefficient,
        Strategy::CorruptProductPoly,
        Strategy::FalseComplainer,
        Strategy::RandomByzantine,
        Strategy::Silent,
    ];

    /// Every strategy that deviates from the protocol.
    pub const MALICIOUS: [Strategy; 7] = [
        Strategy::InconsistentEvssDealer,
        Strategy::WrongSubshareConstant,
        Strategy::BadGapCoefficient,
        Strategy::CorruptProductPoly,
        Strategy::FalseComplainer,
        Strategy::RandomByzantine,
        Strategy::Silent,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::SemiHonest => "SemiHonest",
            Strategy::InconsistentEvssDealer => "InconsistentEvssDealer",
            Strategy::WrongSubshareConstant => "WrongSubshareConstant",
            Strategy::BadGapCoefficient => "BadGapCoefficient",
            Strategy::CorruptProductPoly => "CorruptProductPoly",
            Strategy::FalseComplainer => "FalseComplainer",
            Strategy::RandomByzantine => "RandomByzantine",
            Strategy::Silent => "Silent",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Strategy::ALL
            .into_iter()
            .find(|x| x.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown strategy {s:?}"))
    }
}

/// What a dealt polynomial is for.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DealPurpose {
    /// Re-sharing a held share with `delta` forced-zero coefficients after
    /// the constant term.
    Subshare { delta: usize },
    /// Re-sharing a received subshare value for the gap check.
    GapCheck,
    /// A mask polynomial of the product step.
    Mask,
    /// The masked product polynomial.
    Product,
}

/// The protocol step an outbox belongs to.
#[derive(Clone, Copy, Debug)]
pub enum Step<'a> {
    Input,
    EvssDeal,
    EvssExchange,
    /// Complaint round; lists `(tag, dealer, value shape)` of every running
    /// instance and the participants.
    EvssComplain {
        instances: &'a [(String, PartyId, (usize, usize))],
        participants: &'a [PartyId],
    },
    EvssResolve,
    EvssVote,
    Rows,
    Points,
    PlainValues,
    /// Product check round; lists the dealers being checked and the
    /// accusation tag.
    Accuse {
        tag: &'a str,
        dealers: &'a [PartyId],
    },
    Reveal,
}

pub struct AdvContext<'a> {
    pub me: PartyId,
    pub field: Field,
    pub step: Step<'a>,
    pub coalition: &'a BTreeMap<PartyId, Strategy>,
    pub rng: &'a mut ChaCha12Rng,
    pub seen: &'a [Record],
}

impl AdvContext<'_> {
    fn is_ally(&self, p: PartyId) -> bool {
        self.coalition.contains_key(&p)
    }

    /// Everything any coalition member has received so far.
    pub fn coalition_view(&self) -> impl Iterator<Item = &Envelope> {
        self.seen.iter().filter_map(move |r| match r {
            Record::Envelope(e) => match e.to {
                Endpoint::All => Some(e.as_ref()),
                Endpoint::Worker(p) if self.coalition.contains_key(&p) => Some(e.as_ref()),
                _ => None,
            },
            _ => None,
        })
    }
}

fn bump(field: Field, m: &FMatrix, rng: &mut ChaCha12Rng) -> FMatrix {
    let mut out = m.clone();
    let delta = rng.random_range(1..field.modulus());
    out.set(0, 0, field.add(out.get(0, 0), delta));
    out
}

fn with_coeff(poly: &MatPoly, k: usize, f: impl FnOnce(FMatrix) -> FMatrix) -> MatPoly {
    let (r, c) = poly.shape();
    let field = poly.field();
    let len = poly.len().max(k + 1);
    let mut coeffs: Vec<FMatrix> = (0..len).map(|i| poly.coeff(i)).collect();
    coeffs[k] = f(std::mem::replace(
        &mut coeffs[k],
        FMatrix::zeros(field, r, c),
    ));
    MatPoly::new(field, r, c, coeffs).expect("common shape")
}

/// Deal-time deviation for strategies that corrupt polynomial content.
pub fn tamper_poly(
    strategy: Strategy,
    purpose: DealPurpose,
    poly: MatPoly,
    rng: &mut ChaCha12Rng,
) -> MatPoly {
    let field = poly.field();
    match (strategy, purpose) {
        (Strategy::WrongSubshareConstant, DealPurpose::Subshare { .. }) => {
            with_coeff(&poly, 0, |c| {
                let mut c = c;
                c.set(0, 0, field.add(c.get(0, 0), 1));
                c
            })
        }
        (Strategy::BadGapCoefficient, DealPurpose::Subshare { delta }) if delta >= 1 => {
            with_coeff(&poly, 1, |c| bump(field, &c, rng))
        }
        (Strategy::CorruptProductPoly, DealPurpose::Product) => with_coeff(&poly, 0, |c| {
            let mut c = c;
            c.set(0, 0, field.add(c.get(0, 0), 1));
            c
        }),
        (Strategy::RandomByzantine, _) if !poly.is_empty() && rng.random_ratio(1, 3) => {
            let k = rng.random_range(0..poly.len());
            with_coeff(&poly, k, |c| bump(field, &c, rng))
        }
        _ => poly,
    }
}

fn random_like(field: Field, m: &FMatrix, rng: &mut ChaCha12Rng) -> FMatrix {
    rng.matrix(field, m.rows(), m.cols())
}

fn random_poly_like(field: Field, p: &MatPoly, rng: &mut ChaCha12Rng) -> MatPoly {
    let (r, c) = p.shape();
    let coeffs = (0..p.len()).map(|_| rng.matrix(field, r, c)).collect();
    MatPoly::new(field, r, c, coeffs).expect("common shape")
}

fn scramble(field: Field, payload: Payload, rng: &mut ChaCha12Rng) -> Payload {
    match payload {
        Payload::Value(v) => Payload::Value(random_like(field, &v, rng)),
        Payload::Row(vs) => Payload::Row(vs.iter().map(|v| random_like(field, v, rng)).collect()),
        Payload::Accuse(_) => Payload::Accuse(rng.random_range(1..=64)),
        Payload::Evss(m) => Payload::Evss(match m {
            EvssMsg::Deal { f, g } => EvssMsg::Deal {
                f: random_poly_like(field, &f, rng),
                g: random_poly_like(field, &g, rng),
            },
            EvssMsg::Cross { f_at, g_at } => EvssMsg::Cross {
                f_at: random_like(field, &f_at, rng),
                g_at: random_like(field, &g_at, rng),
            },
            EvssMsg::Complaint { accused, values } => EvssMsg::Complaint {
                accused,
                values: values
                    .map(|(u, v)| (random_like(field, &u, rng), random_like(field, &v, rng))),
            },
            EvssMsg::Reveal { target, f, g } => EvssMsg::Reveal {
                target,
                f: random_poly_like(field, &f, rng),
                g: random_poly_like(field, &g, rng),
            },
            EvssMsg::Consistent => EvssMsg::Consistent,
        }),
    }
}

fn misshape(field: Field, payload: Payload) -> Payload {
    match payload {
        Payload::Value(v) => Payload::Value(FMatrix::zeros(field, v.rows() + 1, v.cols())),
        Payload::Row(mut vs) => {
            vs.pop();
            Payload::Row(vs)
        }
        other => other,
    }
}

/// Rewrites the honest outbox of an adversarial worker.
pub fn adversary_act(
    strategy: Strategy,
    ctx: &mut AdvContext<'_>,
    outbox: Vec<Outgoing>,
) -> Vec<Outgoing> {
    let field = ctx.field;
    match strategy {
        Strategy::SemiHonest
        | Strategy::WrongSubshareConstant
        | Strategy::BadGapCoefficient
        | Strategy::CorruptProductPoly => outbox,
        Strategy::Silent => Vec::new(),
        Strategy::InconsistentEvssDealer => match ctx.step {
            Step::EvssDeal => {
                // One guaranteed victim per instance, plus a few random extras.
                let mut victims: BTreeMap<String, Endpoint> = BTreeMap::new();
                for o in &outbox {
                    if let Endpoint::Worker(p) = o.to {
                        if !ctx.is_ally(p) && p != ctx.me {
                            let e = victims.entry(o.tag.clone()).or_insert(o.to);
                            if ctx.rng.random_ratio(1, 2) {
                                *e = o.to;
                            }
                        }
                    }
                }
                outbox
                    .into_iter()
                    .map(|mut o| {
                        let hit = victims.get(&o.tag) == Some(&o.to)
                            || matches!(o.to, Endpoint::Worker(p) if !ctx.coalition.contains_key(&p))
                                && ctx.rng.random_ratio(1, 4);
                        if hit {
                            if let Payload::Evss(EvssMsg::Deal { f, g }) = o.payload {
                                let f = with_coeff(&f, 0, |c| bump(field, &c, ctx.rng));
                                o.payload = Payload::Evss(EvssMsg::Deal { f, g });
                            }
                        }
                        o
                    })
                    .collect()
            }
            Step::EvssResolve => match ctx.rng.random_range(0..3) {
                0 => Vec::new(),
                1 => outbox,
                _ => outbox
                    .into_iter()
                    .map(|mut o| {
                        if let Payload::Evss(EvssMsg::Reveal { target, f, g }) = o.payload {
                            let f = with_coeff(&f, 0, |c| bump(field, &c, ctx.rng));
                            o.payload = Payload::Evss(EvssMsg::Reveal { target, f, g });
                        }
                        o
                    })
                    .collect(),
            },
            _ => outbox,
        },
        Strategy::FalseComplainer => {
            let mut out = outbox;
            match ctx.step {
                Step::EvssComplain {
                    instances,
                    participants,
                } => {
                    for (tag, dealer, (r, c)) in instances {
                        let honest: Vec<PartyId> = participants
                            .iter()
                            .copied()
                            .filter(|&p| p != *dealer && p != ctx.me && !ctx.is_ally(p))
                            .collect();
                        if honest.is_empty() {
                            continue;
                        }
                        let accused = honest[ctx.rng.random_range(0..honest.len())];
                        if out.iter().any(|o| {
                            o.tag == *tag
                                && matches!(o.payload, Payload::Evss(EvssMsg::Complaint { accused: a, .. }) if a == accused)
                        }) {
                            continue;
                        }
                        let (r, c) = (*r, *c);
                        let values =
                            Some((ctx.rng.matrix(field, r, c), ctx.rng.matrix(field, r, c)));
                        out.push(Outgoing::new(
                            Endpoint::All,
                            tag.clone(),
                            Payload::Evss(EvssMsg::Complaint { accused, values }),
                        ));
                    }
                }
                Step::Accuse { tag, dealers } => {
                    for &d in dealers {
                        if d != ctx.me
                            && !ctx.is_ally(d)
                            && !out.iter().any(|o| o.payload == Payload::Accuse(d))
                        {
                            out.push(Outgoing::new(Endpoint::All, tag, Payload::Accuse(d)));
                        }
                    }
                }
                _ => {}
            }
            out
        }
        Strategy::RandomByzantine => outbox
            .into_iter()
            .filter_map(|mut o| {
                let roll = ctx.rng.random_range(0..24);
                match roll {
                    0..=3 => None,
                    4..=7 => {
                        o.payload = scramble(field, o.payload, ctx.rng);
                        Some(o)
                    }
                    8 => {
                        o.payload = misshape(field, o.payload);
                        Some(o)
                    }
                    _ => Some(o),
                }
            })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coins::derive_rng;

    #[test]
    fn strategy_names_roundtrip() {
        for s in Strategy::ALL {
            assert_eq!(s.name().parse::<Strategy>().unwrap(), s);
        }
        assert!("Nope".parse::<Strategy>().is_err());
    }

    #[test]
    fn semi_honest_and_silent() {
        let f = Field::new(7).unwrap();
        let out = vec![Outgoing::new(
            Endpoint::Worker(2),
            "x",
            Payload::Value(FMatrix::scalar(f, 3)),
        )];
        let coalition = BTreeMap::from([(1, Strategy::SemiHonest)]);
        let mut rng = derive_rng(0, "t");
        let mut ctx = AdvContext {
            me: 1,
            field: f,
            step: Step::PlainValues,
            coalition: &coalition,
            rng: &mut rng,
            seen: &[],
        };
        assert_eq!(
            adversary_act(Strategy::SemiHonest, &mut ctx, out.clone()),
            out
        );
        assert!(adversary_act(Strategy::Silent, &mut ctx, out).is_empty());
    }

    #[test]
    fn tamper_targets_the_right_purpose() {
        let f = Field::new(11).unwrap();
        let p = MatPoly::from_coeffs(vec![
            FMatrix::scalar(f, 3),
            FMatrix::scalar(f, 0),
            FMatrix::scalar(f, 5),
        ]);
        let mut rng = derive_rng(0, "t");
        let w = tamper_poly(
            Strategy::WrongSubshareConstant,
            DealPurpose::Subshare { delta: 1 },
            p.clone(),
            &mut rng,
        );
        assert_eq!(w.coeff(0).get(0, 0), 4);
        assert_eq!(
            tamper_poly(
                Strategy::WrongSubshareConstant,
                DealPurpose::Mask,
                p.clone(),
                &mut rng
            ),
            p
        );
        let g = tamper_poly(
            Strategy::BadGapCoefficient,
            DealPurpose::Subshare { delta: 1 },
            p.clone(),
            &mut rng,
        );
        assert!(!g.coeff(1).is_zero());
        assert_eq!(
            tamper_poly(
                Strategy::BadGapCoefficient,
                DealPurpose::Subshare { delta: 0 },
                p.clone(),
                &mut rng
            ),
            p
        );
    }
}

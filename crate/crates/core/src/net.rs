//! Deterministic round-based network: private links, authenticated
//! broadcast, adversary injection and transcript capture.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::adversary::{adversary_act, tamper_poly, AdvContext, DealPurpose, Step, Strategy};
use crate::coins::{derive_rng, Actor, Coins, Stream};
use crate::evss::EvssMsg;
use crate::gf::{FMatrix, Field, GfError};
use crate::poly::{MatPoly, PolyError};
use crate::rscode::RsError;
use crate::sharing::{PartyId, SharingError};
use crate::subroutines::{ActiveSet, Reason};

/// Why a protocol run stopped without an output.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ProtocolError {
    #[error("decoding failed in {phase}: {detail}")]
    DecodingFailure { phase: String, detail: String },
    #[error("{have} contributors left, need {need}")]
    TooFewSurvivors { have: usize, need: usize },
    #[error("parameter violation: {0}")]
    ParameterViolation(String),
    #[error("label mismatch: {0}")]
    LabelMismatch(String),
    #[error("degree mismatch: {0}")]
    DegreeMismatch(String),
    #[error("internal: {0}")]
    Internal(String),
}

impl ProtocolError {
    pub fn decoding(phase: &str, e: impl fmt::Display) -> Self {
        ProtocolError::DecodingFailure {
            phase: phase.to_string(),
            detail: e.to_string(),
        }
    }
}

impl From<GfError> for ProtocolError {
    fn from(e: GfError) -> Self {
        ProtocolError::Internal(e.to_string())
    }
}

impl From<PolyError> for ProtocolError {
    fn from(e: PolyError) -> Self {
        match e {
            PolyError::InsufficientPoints { need, got } => {
                ProtocolError::ParameterViolation(format!("need {need} points, have {got}"))
            }
            other => ProtocolError::Internal(other.to_string()),
        }
    }
}

impl From<RsError> for ProtocolError {
    fn from(e: RsError) -> Self {
        ProtocolError::decoding("code", e)
    }
}

impl From<SharingError> for ProtocolError {
    fn from(e: SharingError) -> Self {
        match e {
            SharingError::Code(c) => ProtocolError::decoding("reconstruction", c),
            SharingError::InsufficientShares { need, got } => {
                ProtocolError::ParameterViolation(format!("need {need} shares, have {got}"))
            }
            other => ProtocolError::Internal(other.to_string()),
        }
    }
}

/// A message endpoint. `All` is the broadcast channel.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Endpoint {
    Source(usize),
    Worker(PartyId),
    Master,
    All,
}

impl fmt::Display for Endpoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Endpoint::Source(g) => write!(f, "s{g}"),
            Endpoint::Worker(n) => write!(f, "w{n}"),
            Endpoint::Master => f.write_str("master"),
            Endpoint::All => f.write_str("all"),
        }
    }
}

impl FromStr for Endpoint {
    type Err = WireError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || WireError::Endpoint(s.to_string());
        match s {
            "master" => Ok(Endpoint::Master),
            "all" => Ok(Endpoint::All),
            _ => {
                // canonical decimal only, so every endpoint has one spelling
                let index = |num: &str| -> Result<usize, WireError> {
                    let canonical = !num.is_empty()
                        && num.bytes().all(|b| b.is_ascii_digit())
                        && (num == "0" || !num.starts_with('0'));
                    if canonical {
                        num.parse().map_err(|_| bad())
                    } else {
                        Err(bad())
                    }
                };
                if let Some(num) = s.strip_prefix('s') {
                    Ok(Endpoint::Source(index(num)?))
                } else if let Some(num) = s.strip_prefix('w') {
                    Ok(Endpoint::Worker(index(num)?))
                } else {
                    Err(bad())
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Payload {
    /// A single matrix: input shares, plain point values, broadcast points,
    /// final shares for the master.
    Value(FMatrix),
    Evss(EvssMsg),
    /// One holder's contribution to a shares-times-matrix product.
    Row(Vec<FMatrix>),
    /// Claims that the named dealer's product polynomial failed a point check.
    Accuse(PartyId),
}

impl Payload {
    pub fn kind(&self) -> &'static str {
        match self {
            Payload::Value(_) => "value",
            Payload::Evss(m) => m.kind(),
            Payload::Row(_) => "row",
            Payload::Accuse(_) => "accuse",
        }
    }

    fn rank(&self) -> u8 {
        match self {
            Payload::Value(_) => 0,
            Payload::Evss(m) => 1 + m.rank(),
            Payload::Row(_) => 10,
            Payload::Accuse(_) => 11,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Envelope {
    pub round: u64,
    pub from: Endpoint,
    pub to: Endpoint,
    pub tag: String,
    pub payload: Payload,
}

impl Envelope {
    pub fn is_broadcast(&self) -> bool {
        self.to == Endpoint::All
    }

    /// Whether a party listening at `who` sees this envelope.
    pub fn visible_to(&self, who: Endpoint) -> bool {
        self.to == who || self.to == Endpoint::All
    }
}

/// A message before the network stamps round and sender.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Outgoing {
    pub to: Endpoint,
    pub tag: String,
    pub payload: Payload,
}

impl Outgoing {
    pub fn new(to: Endpoint, tag: impl Into<String>, payload: Payload) -> Self {
        Outgoing {
            to,
            tag: tag.into(),
            payload,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Record {
    Header {
        prime: u64,
        n: usize,
        t: usize,
        m: usize,
        seed: u64,
    },
    Envelope(Arc<Envelope>),
    Verdict {
        tag: String,
        dealer: PartyId,
        accepted: bool,
        unanimous: bool,
    },
    Elimination {
        party: PartyId,
        reason: Reason,
        phase: String,
    },
    Output {
        register: String,
        party: PartyId,
        value: FMatrix,
    },
    MasterOutput {
        register: String,
        value: FMatrix,
    },
    Abort {
        reason: String,
    },
}

/// Everything delivered at the end of one round, in canonical order.
pub struct Mailbag {
    envs: Vec<Arc<Envelope>>,
    by_tag: HashMap<String, Vec<usize>>,
}

impl Mailbag {
    fn new(envs: Vec<Arc<Envelope>>) -> Self {
        let mut by_tag: HashMap<String, Vec<usize>> = HashMap::new();
        for (i, e) in envs.iter().enumerate() {
            by_tag.entry(e.tag.clone()).or_default().push(i);
        }
        Mailbag { envs, by_tag }
    }

    pub fn all(&self) -> impl Iterator<Item = &Envelope> {
        self.envs.iter().map(|e| e.as_ref())
    }

    pub fn tagged<'a>(&'a self, tag: &str) -> impl Iterator<Item = &'a Envelope> + 'a {
        self.by_tag
            .get(tag)
            .into_iter()
            .flatten()
            .map(move |&i| self.envs[i].as_ref())
    }

    /// Messages under `tag` addressed to `who` or broadcast.
    pub fn inbox<'a>(&'a self, tag: &str, who: Endpoint) -> Vec<&'a Envelope> {
        self.tagged(tag).filter(|e| e.visible_to(who)).collect()
    }

    /// First value sent by `from` under `tag` to `who` (or broadcast), if it
    /// has the expected shape.
    pub fn value_from(
        &self,
        tag: &str,
        from: Endpoint,
        who: Endpoint,
        shape: (usize, usize),
    ) -> Option<&FMatrix> {
        self.tagged(tag)
            .filter(|e| e.from == from && e.visible_to(who))
            .find_map(|e| match &e.payload {
                Payload::Value(v) => Some(v),
                _ => None,
            })
            .filter(|v| v.shape() == shape)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NetParams {
    pub field: Field,
    pub n: usize,
    pub t: usize,
    pub m: usize,
}

/// The simulation engine shared by all protocol phases.
pub struct Network {
    params: NetParams,
    round: u64,
    pending: Vec<Envelope>,
    records: Vec<Record>,
    adversaries: BTreeMap<PartyId, Strategy>,
    coins: Box<dyn Coins>,
    adv_rng: ChaCha12Rng,
    active: ActiveSet,
    /// Test fixture: sources share with all-zero masks.
    pub leaky_sources: bool,
}

impl Network {
    pub fn new(
        params: NetParams,
        adversaries: BTreeMap<PartyId, Strategy>,
        coins: Box<dyn Coins>,
        adv_seed: u64,
    ) -> Self {
        Network {
            params,
            round: 0,
            pending: Vec::new(),
            records: Vec::new(),
            adversaries,
            coins,
            adv_rng: derive_rng(adv_seed, "adversary"),
            active: ActiveSet::new(params.n),
            leaky_sources: false,
        }
    }

    pub fn params(&self) -> NetParams {
        self.params
    }

    pub fn field(&self) -> Field {
        self.params.field
    }

    pub fn n(&self) -> usize {
        self.params.n
    }

    pub fn t(&self) -> usize {
        self.params.t
    }

    pub fn m(&self) -> usize {
        self.params.m
    }

    pub fn round(&self) -> u64 {
        self.round
    }

    pub fn active(&self) -> &ActiveSet {
        &self.active
    }

    pub fn active_parties(&self) -> Vec<PartyId> {
        self.active.parties()
    }

    pub fn is_honest(&self, p: PartyId) -> bool {
        !self.adversaries.contains_key(&p)
    }

    pub fn strategy(&self, p: PartyId) -> Option<Strategy> {
        self.adversaries.get(&p).copied()
    }

    pub fn adversaries(&self) -> &BTreeMap<PartyId, Strategy> {
        &self.adversaries
    }

    pub fn alpha(&self, p: PartyId) -> u64 {
        self.params.field.alpha(p)
    }

    pub fn alphas(&self, parties: &[PartyId]) -> Vec<u64> {
        parties.iter().map(|&p| self.alpha(p)).collect()
    }

    pub fn stream<'a>(&'a mut self, actor: Actor, label: &'a str) -> Stream<'a> {
        Stream::new(self.coins.as_mut(), actor, label)
    }

    /// Lets an adversarial party alter a polynomial it is about to deal.
    pub fn tamper(&mut self, party: PartyId, purpose: DealPurpose, poly: MatPoly) -> MatPoly {
        match self.adversaries.get(&party) {
            Some(&s) => tamper_poly(s, purpose, poly, &mut self.adv_rng),
            None => poly,
        }
    }

    /// Queues the outbox of one sender for the current round. Adversarial
    /// workers get to rewrite it first.
    pub fn post(&mut self, from: Endpoint, step: Step<'_>, mut outbox: Vec<Outgoing>) {
        if let Endpoint::Worker(p) = from {
            if let Some(&strategy) = self.adversaries.get(&p) {
                let mut ctx = AdvContext {
                    me: p,
                    field: self.params.field,
                    step,
                    coalition: &self.adversaries,
                    rng: &mut self.adv_rng,
                    seen: &self.records,
                };
                outbox = adversary_act(strategy, &mut ctx, outbox);
            }
        }
        let round = self.round;
        self.pending.extend(outbox.into_iter().map(|o| Envelope {
            round,
            from,
            to: o.to,
            tag: o.tag,
            payload: o.payload,
        }));
    }

    /// Ends the round: sorts pending messages canonically, records them and
    /// hands them out.
    pub fn deliver(&mut self) -> Mailbag {
        let mut envs = std::mem::take(&mut self.pending);
        envs.sort_by(|a, b| {
            (a.round, a.from, a.to, &a.tag, a.payload.rank()).cmp(&(
                b.round,
                b.from,
                b.to,
                &b.tag,
                b.payload.rank(),
            ))
        });
        let envs: Vec<Arc<Envelope>> = envs.into_iter().map(Arc::new).collect();
        self.records
            .extend(envs.iter().cloned().map(Record::Envelope));
        self.round += 1;
        Mailbag::new(envs)
    }

    pub fn record(&mut self, r: Record) {
        self.records.push(r);
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    /// Removes `party` from the active set; repeated eliminations are ignored.
    pub fn eliminate(&mut self, party: PartyId, reason: Reason, phase: &str) {
        if self.active.eliminate(party, reason) {
            self.records.push(Record::Elimination {
                party,
                reason,
                phase: phase.to_string(),
            });
        }
    }

    pub fn into_records(self) -> Vec<Record> {
        self.records
    }
}

/// A finished run: the ordered records plus the outcome.
#[derive(Clone, Debug)]
pub struct Transcript {
    pub records: Vec<Record>,
    pub outcome: Result<Vec<(String, FMatrix)>, ProtocolError>,
}

impl Transcript {
    pub fn eliminations(&self) -> Vec<(PartyId, Reason)> {
        self.records
            .iter()
            .filter_map(|r| match r {
                Record::Elimination { party, reason, .. } => Some((*party, *reason)),
                _ => None,
            })
            .collect()
    }

    pub fn envelopes(&self) -> impl Iterator<Item = &Envelope> {
        self.records.iter().filter_map(|r| match r {
            Record::Envelope(e) => Some(e.as_ref()),
            _ => None,
        })
    }

    pub fn verdicts(&self) -> impl Iterator<Item = (&str, PartyId, bool, bool)> {
        self.records.iter().filter_map(|r| match r {
            Record::Verdict {
                tag,
                dealer,
                accepted,
                unanimous,
            } => Some((tag.as_str(), *dealer, *accepted, *unanimous)),
            _ => None,
        })
    }

    /// Line-delimited serialization.
    pub fn to_lines(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&RawRecord::from(r).to_line());
            out.push('\n');
        }
        out
    }
}

// ---------------------------------------------------------------------------
// Wire format

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WireError {
    #[error("malformed record: {0}")]
    Json(String),
    #[error("bad endpoint {0:?}")]
    Endpoint(String),
    #[error("bad matrix: {0}")]
    Matrix(String),
    #[error("unknown reason code {0:?}")]
    Reason(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<u64>,
}

impl From<&FMatrix> for RawMatrix {
    fn from(m: &FMatrix) -> Self {
        RawMatrix {
            rows: m.rows(),
            cols: m.cols(),
            data: m.data().to_vec(),
        }
    }
}

impl RawMatrix {
    pub fn to_matrix(&self, field: Field) -> Result<FMatrix, WireError> {
        if self.data.iter().any(|&v| v >= field.modulus()) {
            return Err(WireError::Matrix("entry out of range".into()));
        }
        if self.rows.checked_mul(self.cols) != Some(self.data.len()) {
            return Err(WireError::Matrix("size mismatch".into()));
        }
        FMatrix::new(field, self.rows, self.cols, self.data.clone())
            .map_err(|e| WireError::Matrix(e.to_string()))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawPoly {
    pub rows: usize,
    pub cols: usize,
    pub coeffs: Vec<Vec<u64>>,
}

impl From<&MatPoly> for RawPoly {
    fn from(p: &MatPoly) -> Self {
        let (rows, cols) = p.shape();
        RawPoly {
            rows,
            cols,
            coeffs: p.coeffs().iter().map(|c| c.data().to_vec()).collect(),
        }
    }
}

impl RawPoly {
    pub fn to_poly(&self, field: Field) -> Result<MatPoly, WireError> {
        let coeffs = self
            .coeffs
            .iter()
            .map(|c| {
                RawMatrix {
                    rows: self.rows,
                    cols: self.cols,
                    data: c.clone(),
                }
                .to_matrix(field)
            })
            .collect::<Result<Vec<_>, _>>()?;
        MatPoly::new(field, self.rows, self.cols, coeffs)
            .map_err(|e| WireError::Matrix(e.to_string()))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RawPayload {
    Value {
        value: RawMatrix,
    },
    Deal {
        f: RawPoly,
        g: RawPoly,
    },
    Cross {
        f_at: RawMatrix,
        g_at: RawMatrix,
    },
    Complaint {
        accused: PartyId,
        f_at: Option<RawMatrix>,
        g_at: Option<RawMatrix>,
    },
    Reveal {
        target: PartyId,
        f: RawPoly,
        g: RawPoly,
    },
    Consistent,
    Row {
        values: Vec<RawMatrix>,
    },
    Accuse {
        accused: PartyId,
    },
}

impl From<&Payload> for RawPayload {
    fn from(p: &Payload) -> Self {
        match p {
            Payload::Value(v) => RawPayload::Value { value: v.into() },
            Payload::Row(vs) => RawPayload::Row {
                values: vs.iter().map(RawMatrix::from).collect(),
            },
            Payload::Accuse(a) => RawPayload::Accuse { accused: *a },
            Payload::Evss(m) => match m {
                EvssMsg::Deal { f, g } => RawPayload::Deal {
                    f: f.into(),
                    g: g.into(),
                },
                EvssMsg::Cross { f_at, g_at } => RawPayload::Cross {
                    f_at: f_at.into(),
                    g_at: g_at.into(),
                },
                EvssMsg::Complaint { accused, values } => RawPayload::Complaint {
                    accused: *accused,
                    f_at: values.as_ref().map(|(u, _)| u.into()),
                    g_at: values.as_ref().map(|(_, v)| v.into()),
                },
                EvssMsg::Reveal { target, f, g } => RawPayload::Reveal {
                    target: *target,
                    f: f.into(),
                    g: g.into(),
                },
                EvssMsg::Consistent => RawPayload::Consistent,
            },
        }
    }
}

impl RawPayload {
    pub fn to_payload(&self, field: Field) -> Result<Payload, WireError> {
        Ok(match self {
            RawPayload::Value { value } => Payload::Value(value.to_matrix(field)?),
            RawPayload::Row { values } => Payload::Row(
                values
                    .iter()
                    .map(|v| v.to_matrix(field))
                    .collect::<Result<_, _>>()?,
            ),
            RawPayload::Accuse { accused } => Payload::Accuse(*accused),
            RawPayload::Deal { f, g } => Payload::Evss(EvssMsg::Deal {
                f: f.to_poly(field)?,
                g: g.to_poly(field)?,
            }),
            RawPayload::Cross { f_at, g_at } => Payload::Evss(EvssMsg::Cross {
                f_at: f_at.to_matrix(field)?,
                g_at: g_at.to_matrix(field)?,
            }),
            RawPayload::Complaint {
                accused,
                f_at,
                g_at,
            } => {
                let values = match (f_at, g_at) {
                    (Some(u), Some(v)) => Some((u.to_matrix(field)?, v.to_matrix(field)?)),
                    (None, None) => None,
                    _ => return Err(WireError::Matrix("complaint carries one value".into())),
                };
                Payload::Evss(EvssMsg::Complaint {
                    accused: *accused,
                    values,
                })
            }
            RawPayload::Reveal { target, f, g } => Payload::Evss(EvssMsg::Reveal {
                target: *target,
                f: f.to_poly(field)?,
                g: g.to_poly(field)?,
            }),
            RawPayload::Consistent => Payload::Evss(EvssMsg::Consistent),
        })
    }
}

/// One transcript line. Field order is fixed by declaration order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "rec", rename_all = "snake_case")]
pub enum RawRecord {
    Header {
        prime: u64,
        n: usize,
        t: usize,
        m: usize,
        seed: u64,
    },
    Env {
        round: u64,
        from: String,
        to: String,
        tag: String,
        payload: RawPayload,
    },
    Verdict {
        tag: String,
        dealer: PartyId,
        accepted: bool,
        unanimous: bool,
    },
    Elim {
        party: PartyId,
        reason: String,
        phase: String,
    },
    Output {
        register: String,
        party: PartyId,
        value: RawMatrix,
    },
    Master {
        register: String,
        value: RawMatrix,
    },
    Abort {
        reason: String,
    },
}

impl From<&Record> for RawRecord {
    fn from(r: &Record) -> Self {
        match r {
            Record::Header {
                prime,
                n,
                t,
                m,
                seed,
            } => RawRecord::Header {
                prime: *prime,
                n: *n,
                t: *t,
                m: *m,
                seed: *seed,
            },
            Record::Envelope(e) => RawRecord::Env {
                round: e.round,
                from: e.from.to_string(),
                to: e.to.to_string(),
                tag: e.tag.clone(),
                payload: (&e.payload).into(),
            },
            Record::Verdict {
                tag,
                dealer,
                accepted,
                unanimous,
            } => RawRecord::Verdict {
                tag: tag.clone(),
                dealer: *dealer,
                accepted: *accepted,
                unanimous: *unanimous,
            },
            Record::Elimination {
                party,
                reason,
                phase,
            } => RawRecord::Elim {
                party: *party,
                reason: reason.to_string(),
                phase: phase.clone(),
            },
            Record::Output {
                register,
                party,
                value,
            } => RawRecord::Output {
                register: register.clone(),
                party: *party,
                value: value.into(),
            },
            Record::MasterOutput { register, value } => RawRecord::Master {
                register: register.clone(),
                value: value.into(),
            },
            Record::Abort { reason } => RawRecord::Abort {
                reason: reason.clone(),
            },
        }
    }
}

impl RawRecord {
    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("records serialize")
    }

    pub fn parse(line: &str) -> Result<Self, WireError> {
        serde_json::from_str(line).map_err(|e| WireError::Json(e.to_string()))
    }

    pub fn to_record(&self, field: Field) -> Result<Record, WireError> {
        Ok(match self {
            RawRecord::Header {
                prime,
                n,
                t,
                m,
                seed,
            } => Record::Header {
                prime: *prime,
                n: *n,
                t: *t,
                m: *m,
                seed: *seed,
            },
            RawRecord::Env {
                round,
                from,
                to,
                tag,
                payload,
            } => Record::Envelope(Arc::new(Envelope {
                round: *round,
                from: from.parse()?,
                to: to.parse()?,
                tag: tag.clone(),
                payload: payload.to_payload(field)?,
            })),
            RawRecord::Verdict {
                tag,
                dealer,
                accepted,
                unanimous,
            } => Record::Verdict {
                tag: tag.clone(),
                dealer: *dealer,
                accepted: *accepted,
                unanimous: *unanimous,
            },
            RawRecord::Elim {
                party,
                reason,
                phase,
            } => Record::Elimination {
                party: *party,
                reason: reason
                    .parse()
                    .map_err(|_| WireError::Reason(reason.clone()))?,
                phase: phase.clone(),
            },
            RawRecord::Output {
                register,
                party,
                value,
            } => Record::Output {
                register: register.clone(),
                party: *party,
                value: value.to_matrix(field)?,
            },
            RawRecord::Master { register, value } => Record::MasterOutput {
                register: register.clone(),
                value: value.to_matrix(field)?,
            },
            RawRecord::Abort { reason } => Record::Abort {
                reason: reason.clone(),
            },
        })
    }
}

/// Parses a whole serialized transcript. The field is taken from the header
/// line, which must come first.
pub fn parse_transcript(text: &str) -> Result<Vec<Record>, WireError> {
    let mut field = None;
    let mut out = Vec::new();
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        let raw = RawRecord::parse(line)?;
        if let RawRecord::Header { prime, .. } = raw {
            field = Some(Field::new(prime).map_err(|e| WireError::Matrix(e.to_string()))?);
        }
        let f =
            field.ok_or_else(|| WireError::Json("transcript must start with a header".into()))?;
        out.push(raw.to_record(f)?);
    }
    Ok(out)
}

/// Set of parties listed in a transcript's elimination records.
pub fn eliminated_parties(records: &[Record]) -> BTreeSet<PartyId> {
    records
        .iter()
        .filter_map(|r| match r {
            Record::Elimination { party, .. } => Some(*party),
            _ => None,
        })
        .collect()
}

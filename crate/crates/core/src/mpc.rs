//! Shared-matrix arithmetic: input sharing, multiplication (semi-honest and
//! malicious-robust), direct/reverse recoding, transposition, addition and
//! reconstruction at the master, composed by a small program runner.

use std::collections::{BTreeMap, HashMap};

use crate::adversary::{DealPurpose, Step};
use crate::coins::{Actor, Randomness};
use crate::evss::{run_evss_batch, EvssJob};
use crate::gf::{Axis, FMatrix, Field};
use crate::net::{Endpoint, Network, Outgoing, Payload, ProtocolError, Record};
use crate::poly::{extraction_weights, MatPoly};
use crate::sharing::{make_share_poly, robust_reconstruct, Direction, PartyId, Share, ShareLabel};
use crate::subroutines::{eval_shared, subshare, EvalJob, Mode, Reason, SubshareJob, Subshared};

/// Workers needed to tolerate `t` malicious workers with `m` blocks.
pub fn recovery_threshold(m: usize, t: usize) -> usize {
    3 * t + 2 * m - 1
}

/// Workers needed against `t` semi-honest colluders.
pub fn semi_honest_threshold(m: usize, t: usize) -> usize {
    2 * m + 2 * t - 1
}

/// Per-party shares of one matrix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SharedValue {
    pub label: ShareLabel,
    /// Shape of the underlying secret.
    pub shape: (usize, usize),
    pub shares: BTreeMap<PartyId, FMatrix>,
}

impl SharedValue {
    fn share_shape(&self) -> (usize, usize) {
        (self.shape.0, self.shape.1 / self.label.m)
    }

    fn get(&self, p: PartyId, field: Field) -> FMatrix {
        let (r, c) = self.share_shape();
        self.shares
            .get(&p)
            .cloned()
            .unwrap_or_else(|| FMatrix::zeros(field, r, c))
    }
}

fn zeros(field: Field, shape: (usize, usize)) -> FMatrix {
    FMatrix::zeros(field, shape.0, shape.1)
}

// ---------------------------------------------------------------------------
// Masks

/// Mask polynomials `O_0 .. O_{m+t-2}`, each of degree at most `t`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MaskSet {
    pub polys: Vec<MatPoly>,
    m: usize,
}

impl MaskSet {
    /// `d - Σ_l x^(m+l) O_l`.
    pub fn apply(&self, d: &MatPoly) -> Result<MatPoly, ProtocolError> {
        let mut c = d.clone();
        for (l, o) in self.polys.iter().enumerate() {
            c = c.sub(&o.shift(self.m + l))?;
        }
        Ok(c)
    }
}

/// Product polynomial `A_n(x) · B_n(x)ᵀ`.
pub fn product_poly(a_n: &MatPoly, b_n: &MatPoly) -> Result<MatPoly, ProtocolError> {
    Ok(a_n.mul(&b_n.transpose())?)
}

/// Masks that cancel every coefficient of `A_n(x)·B_n(x)ᵀ` above `m+t-1`.
/// Low mask coefficients are uniform; the top coefficient of each mask is
/// solved for, highest mask first.
pub fn build_masks(
    a_n: &MatPoly,
    b_n: &MatPoly,
    m: usize,
    t: usize,
    rng: &mut dyn Randomness,
) -> Result<MaskSet, ProtocolError> {
    let bound = m + t - 1;
    if a_n.len() > bound + 1 || b_n.len() > bound + 1 {
        return Err(ProtocolError::DegreeMismatch(format!(
            "factors of length {} and {} exceed degree {bound}",
            a_n.len(),
            b_n.len()
        )));
    }
    let d = product_poly(a_n, b_n)?;
    let field = d.field();
    let (r, c) = d.shape();
    let count = m + t - 1;
    let mut coeffs: Vec<Vec<FMatrix>> = vec![Vec::new(); count];
    for l in (0..count).rev() {
        let mut low: Vec<FMatrix> = (0..t).map(|_| rng.matrix(field, r, c)).collect();
        let mut top = d.coeff(m + l + t);
        for (lp, masks) in coeffs
            .iter()
            .enumerate()
            .take((l + t).min(count - 1) + 1)
            .skip(l + 1)
        {
            top = top.sub(&masks[l + t - lp])?;
        }
        low.push(top);
        coeffs[l] = low;
    }
    let polys = coeffs
        .into_iter()
        .map(|cs| MatPoly::new(field, r, c, cs))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(MaskSet { polys, m })
}

/// `a · (Σ_j α^j b_j)ᵀ - Σ_l α^(m+l) o_l`: the value a product polynomial
/// must take at `α` given the point values of its ingredients.
pub fn expected_product(
    field: Field,
    m: usize,
    alpha: u64,
    a: &FMatrix,
    bs: &[FMatrix],
    os: &[FMatrix],
) -> FMatrix {
    let mut bhat = zeros(field, bs[0].shape());
    for (j, b) in bs.iter().enumerate() {
        bhat.add_scaled(b, field.pow(alpha, j as u64));
    }
    let mut c = a.mul(&bhat.transpose()).expect("share shapes agree");
    for (l, o) in os.iter().enumerate() {
        c.add_scaled(o, field.neg(field.pow(alpha, (m + l) as u64)));
    }
    c
}

// ---------------------------------------------------------------------------
// Sharing and reconstruction

struct Zero;

impl Randomness for Zero {
    fn elem(&mut self, _: Field) -> u64 {
        0
    }
}

pub fn share_input(
    net: &mut Network,
    source: usize,
    x: &FMatrix,
    dir: Direction,
    tag: &str,
) -> Result<SharedValue, ProtocolError> {
    let label = ShareLabel::new(net.m(), net.t(), 0, dir);
    let stream = format!("{tag}/share");
    let poly = if net.leaky_sources {
        make_share_poly(x, label, &mut Zero)?
    } else {
        make_share_poly(x, label, &mut net.stream(Actor::Source(source), &stream))?
    };
    let active = net.active_parties();
    let out = active
        .iter()
        .map(|&h| {
            Outgoing::new(
                Endpoint::Worker(h),
                tag,
                Payload::Value(poly.eval(net.alpha(h))),
            )
        })
        .collect();
    net.post(Endpoint::Source(source), Step::Input, out);
    let bag = net.deliver();
    let shape = poly.shape();
    let shares = active
        .iter()
        .map(|&h| {
            let v = bag
                .value_from(tag, Endpoint::Source(source), Endpoint::Worker(h), shape)
                .cloned();
            (h, v.unwrap_or_else(|| zeros(net.field(), shape)))
        })
        .collect();
    Ok(SharedValue {
        label,
        shape: x.shape(),
        shares,
    })
}

/// Active workers send their shares to the master, which decodes.
pub fn reveal(
    net: &mut Network,
    x: &SharedValue,
    register: &str,
) -> Result<FMatrix, ProtocolError> {
    let field = net.field();
    let tag = format!("{register}/out");
    let active = net.active_parties();
    for &h in &active {
        if net.is_honest(h) {
            net.record(Record::Output {
                register: register.to_string(),
                party: h,
                value: x.get(h, field),
            });
        }
    }
    for &h in &active {
        let out = vec![Outgoing::new(
            Endpoint::Master,
            tag.clone(),
            Payload::Value(x.get(h, field)),
        )];
        net.post(Endpoint::Worker(h), Step::Reveal, out);
    }
    let bag = net.deliver();
    let shape = x.share_shape();
    let shares: Vec<Share> = (1..=net.n())
        .map(|p| Share {
            label: x.label,
            owner: p,
            point: net.alpha(p),
            value: bag
                .value_from(&tag, Endpoint::Worker(p), Endpoint::Master, shape)
                .cloned()
                .unwrap_or_else(|| zeros(field, shape)),
        })
        .collect();
    let (value, _) = robust_reconstruct(&shares, x.label, net.t())?;
    net.record(Record::MasterOutput {
        register: register.to_string(),
        value: value.clone(),
    });
    Ok(value)
}

pub fn add(a: &SharedValue, b: &SharedValue) -> Result<SharedValue, ProtocolError> {
    if a.label != b.label || a.shape != b.shape {
        return Err(ProtocolError::LabelMismatch(
            "addition operands differ in label or shape".into(),
        ));
    }
    let shares = a
        .shares
        .iter()
        .filter_map(|(p, x)| b.shares.get(p).map(|y| (*p, x.add(y).expect("same shape"))))
        .collect();
    Ok(SharedValue {
        label: a.label,
        shape: a.shape,
        shares,
    })
}

// ---------------------------------------------------------------------------
// Multiplication

fn check_operand(
    x: &SharedValue,
    net: &Network,
    dir: Direction,
    what: &str,
) -> Result<(), ProtocolError> {
    let l = x.label;
    if l.m != net.m() || l.t != net.t() || l.delta != 0 || l.dir != dir {
        return Err(ProtocolError::LabelMismatch(format!(
            "{what} must be a {dir} share without gap"
        )));
    }
    Ok(())
}

/// Share shapes of one multiplication: left factor, one row block of the
/// right factor, and the product.
#[derive(Clone, Copy)]
struct MulShapes {
    a: (usize, usize),
    block: (usize, usize),
    out: (usize, usize),
}

/// Shares of `A·Bᵀ` from a direct share of `A` and a reverse share of `B`.
pub fn multiply(
    net: &mut Network,
    mode: Mode,
    a: &SharedValue,
    b: &SharedValue,
    tag: &str,
) -> Result<SharedValue, ProtocolError> {
    check_operand(a, net, Direction::Direct, "left operand")?;
    check_operand(b, net, Direction::Reverse, "right operand")?;
    let (m, t) = (net.m(), net.t());
    if a.shape.1 != b.shape.1 || !b.shape.0.is_multiple_of(m) {
        return Err(ProtocolError::ParameterViolation(format!(
            "cannot multiply {:?} by the transpose of {:?} in {m} blocks",
            a.shape, b.shape
        )));
    }
    let need = semi_honest_threshold(m, t);
    if net.active().len() < need {
        return Err(ProtocolError::ParameterViolation(format!(
            "{} workers cannot multiply with m={m}, t={t} (need {need})",
            net.active().len()
        )));
    }
    let field = net.field();
    let src_deg = m + t - 1;
    let share_shape = a.share_shape();
    let block = (b.shape.0 / m, share_shape.1);
    let shapes = MulShapes {
        a: share_shape,
        block,
        out: (a.shape.0, b.shape.0 / m),
    };

    let mut jobs = vec![SubshareJob {
        name: format!("{tag}/A"),
        values: a.shares.clone(),
        src_deg,
        delta: m - 1,
        shape: share_shape,
    }];
    for j in 0..m {
        let values = b
            .shares
            .iter()
            .map(|(&p, v)| {
                (
                    p,
                    v.block_split(m, Axis::Rows).expect("divisible")[j].clone(),
                )
            })
            .collect();
        jobs.push(SubshareJob {
            name: format!("{tag}/B{j}"),
            values,
            src_deg,
            delta: m - j - 1,
            shape: block,
        });
    }
    let subs = subshare(net, mode, &jobs)?;

    let dealers = net.active_parties();
    let mut masks = BTreeMap::new();
    let mut products = BTreeMap::new();
    for &n in &dealers {
        let a_n = subs[0].dealt[&n].clone();
        let mut b_hat = MatPoly::zero(field, block.0, block.1);
        for (j, s) in subs[1..].iter().enumerate() {
            b_hat = b_hat.add(&s.dealt[&n].shift(j))?;
        }
        let label = format!("{tag}/mask");
        let ms = build_masks(
            &a_n,
            &b_hat,
            m,
            t,
            &mut net.stream(Actor::Worker(n), &label),
        )?;
        let c = ms.apply(&product_poly(&a_n, &b_hat)?)?;
        masks.insert(n, ms);
        products.insert(n, c);
    }

    let c_shares = match mode {
        Mode::Plain => product_plain(net, &subs, &masks, tag, shapes)?,
        Mode::Robust => product_robust(net, &subs, masks, products, tag, shapes)?,
    };

    let contributors = net.active_parties();
    if contributors.len() < need {
        return Err(ProtocolError::TooFewSurvivors {
            have: contributors.len(),
            need,
        });
    }
    let w = extraction_weights(field, &net.alphas(&contributors), m - 1)?;
    let shares = contributors
        .iter()
        .map(|&h| {
            let mut acc = zeros(field, shapes.out);
            for (&n, &wn) in contributors.iter().zip(&w) {
                if let Some(v) = c_shares.get(&h).and_then(|row| row.get(&n)) {
                    acc.add_scaled(v, wn);
                }
            }
            (h, acc)
        })
        .collect();
    let label = ShareLabel::new(m, t, 0, Direction::Direct);
    Ok(SharedValue {
        label,
        shape: (a.shape.0, b.shape.0),
        shares,
    })
}

/// Point values every holder `h` has of dealer `n`'s ingredients.
fn ingredients(
    subs: &[Subshared],
    h: PartyId,
    n: PartyId,
    field: Field,
    shapes: MulShapes,
) -> (FMatrix, Vec<FMatrix>) {
    let get = |s: &Subshared, sh: (usize, usize)| {
        s.held
            .get(&h)
            .and_then(|m| m.get(&n))
            .cloned()
            .unwrap_or_else(|| zeros(field, sh))
    };
    (
        get(&subs[0], shapes.a),
        subs[1..].iter().map(|s| get(s, shapes.block)).collect(),
    )
}

type CShares = BTreeMap<PartyId, BTreeMap<PartyId, FMatrix>>;

fn product_plain(
    net: &mut Network,
    subs: &[Subshared],
    masks: &BTreeMap<PartyId, MaskSet>,
    tag: &str,
    shapes: MulShapes,
) -> Result<CShares, ProtocolError> {
    let field = net.field();
    let m = net.m();
    let dealers = net.active_parties();
    for &n in &dealers {
        let mut out = Vec::new();
        for (l, o) in masks[&n].polys.iter().enumerate() {
            for &h in &dealers {
                out.push(Outgoing::new(
                    Endpoint::Worker(h),
                    format!("{tag}/O{l}"),
                    Payload::Value(o.eval(net.alpha(h))),
                ));
            }
        }
        net.post(Endpoint::Worker(n), Step::PlainValues, out);
    }
    let bag = net.deliver();
    let count = masks.values().next().map_or(0, |ms| ms.polys.len());
    let mut out = CShares::new();
    for &h in &dealers {
        let row = out.entry(h).or_default();
        for &n in &dealers {
            let (a, bs) = ingredients(subs, h, n, field, shapes);
            let os: Vec<FMatrix> = (0..count)
                .map(|l| {
                    bag.value_from(
                        &format!("{tag}/O{l}"),
                        Endpoint::Worker(n),
                        Endpoint::Worker(h),
                        shapes.out,
                    )
                    .cloned()
                    .unwrap_or_else(|| zeros(field, shapes.out))
                })
                .collect();
            row.insert(n, expected_product(field, m, net.alpha(h), &a, &bs, &os));
        }
    }
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn product_robust(
    net: &mut Network,
    subs: &[Subshared],
    masks: BTreeMap<PartyId, MaskSet>,
    products: BTreeMap<PartyId, MatPoly>,
    tag: &str,
    shapes: MulShapes,
) -> Result<CShares, ProtocolError> {
    let field = net.field();
    let (m, t) = (net.m(), net.t());
    let dealers = net.active_parties();
    let count = m + t - 1;
    let mut jobs = Vec::new();
    for &n in &dealers {
        for (l, o) in masks[&n].polys.iter().enumerate() {
            let o = net.tamper(n, DealPurpose::Mask, o.clone());
            jobs.push(EvssJob {
                tag: format!("{tag}/O{l}/o{n}"),
                dealer: n,
                poly: o,
                degree: t,
            });
        }
        let c = net.tamper(n, DealPurpose::Product, products[&n].clone());
        jobs.push(EvssJob {
            tag: format!("{tag}/C/o{n}"),
            dealer: n,
            poly: c,
            degree: m + t - 1,
        });
    }
    let outcomes = run_evss_batch(net, jobs)?;
    // evss[n] = (mask share maps, product share map)
    let mut o_shares: BTreeMap<PartyId, Vec<BTreeMap<PartyId, FMatrix>>> = BTreeMap::new();
    let mut c_of: BTreeMap<PartyId, BTreeMap<PartyId, FMatrix>> = BTreeMap::new();
    let mut rejected = Vec::new();
    let mut it = outcomes.into_iter();
    for &n in &dealers {
        let mut ok = true;
        let mut os = Vec::new();
        for _ in 0..count {
            let out = it.next().expect("mask outcome");
            ok &= out.accepted;
            os.push(out.shares);
        }
        let out = it.next().expect("product outcome");
        ok &= out.accepted;
        if ok {
            o_shares.insert(n, os);
            c_of.insert(n, out.shares);
        } else {
            rejected.push(n);
        }
    }
    for n in rejected {
        net.eliminate(n, Reason::EvssRejectedDealer, "product-deal");
    }

    let dealers = net.active_parties();
    let acc_tag = format!("{tag}/acc");
    for &h in &dealers {
        let mut out = Vec::new();
        for &n in &dealers {
            let (a, bs) = ingredients(subs, h, n, field, shapes);
            let os: Vec<FMatrix> = o_shares[&n]
                .iter()
                .map(|s| {
                    s.get(&h)
                        .cloned()
                        .unwrap_or_else(|| zeros(field, shapes.out))
                })
                .collect();
            let expected = expected_product(field, m, net.alpha(h), &a, &bs, &os);
            if c_of[&n].get(&h) != Some(&expected) {
                out.push(Outgoing::new(
                    Endpoint::All,
                    acc_tag.clone(),
                    Payload::Accuse(n),
                ));
            }
        }
        net.post(
            Endpoint::Worker(h),
            Step::Accuse {
                tag: &acc_tag,
                dealers: &dealers,
            },
            out,
        );
    }
    let bag = net.deliver();
    let mut accusations = Vec::new();
    for e in bag.tagged(&acc_tag) {
        if let (Endpoint::Worker(c), Payload::Accuse(n), true) =
            (e.from, &e.payload, e.is_broadcast())
        {
            if c != *n
                && dealers.contains(&c)
                && dealers.contains(n)
                && !accusations.contains(&(c, *n))
            {
                accusations.push((c, *n));
            }
        }
    }
    accusations.sort_unstable();

    for (k, (c, n)) in accusations.into_iter().enumerate() {
        if !net.active().contains(c) || !net.active().contains(n) {
            continue;
        }
        let target = net.alpha(c);
        let name = format!("{tag}/res{k}");
        let active = net.active();
        let keep = |mut mp: BTreeMap<PartyId, FMatrix>| {
            mp.retain(|h, _| active.contains(*h));
            mp
        };
        let mut jobs = vec![EvalJob {
            name: format!("{name}/A"),
            held: keep(subs[0].of_origin(n)),
            deg: m + t - 1,
            target,
            shape: shapes.a,
        }];
        for (j, s) in subs[1..].iter().enumerate() {
            jobs.push(EvalJob {
                name: format!("{name}/B{j}"),
                held: keep(s.of_origin(n)),
                deg: m - j - 1 + t,
                target,
                shape: shapes.block,
            });
        }
        for (l, s) in o_shares[&n].iter().enumerate() {
            jobs.push(EvalJob {
                name: format!("{name}/O{l}"),
                held: keep(s.clone()),
                deg: t,
                target,
                shape: shapes.out,
            });
        }
        jobs.push(EvalJob {
            name: format!("{name}/C"),
            held: keep(c_of[&n].clone()),
            deg: m + t - 1,
            target,
            shape: shapes.out,
        });
        let vals = eval_shared(net, &jobs)?;
        let expected = expected_product(
            field,
            m,
            target,
            &vals[0],
            &vals[1..=m],
            &vals[m + 1..m + 1 + count],
        );
        if vals[m + 1 + count] == expected {
            net.eliminate(c, Reason::FalseComplaint, "product-check");
        } else {
            net.eliminate(n, Reason::BadProductRelation, "product-check");
        }
    }

    let mut out = CShares::new();
    for (n, shares) in c_of {
        for (h, v) in shares {
            out.entry(h).or_default().insert(n, v);
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Transforms

fn check_plain_share(x: &SharedValue, net: &Network) -> Result<(), ProtocolError> {
    let l = x.label;
    if l.m != net.m() || l.t != net.t() || l.delta != 0 {
        return Err(ProtocolError::LabelMismatch(
            "transform input must be an ungapped share".into(),
        ));
    }
    Ok(())
}

fn gather(
    net: &Network,
    sub: &Subshared,
    h: PartyId,
    weights: &[u64],
    shape: (usize, usize),
) -> FMatrix {
    let mut acc = zeros(net.field(), shape);
    for (v, &w) in sub.column(h).into_iter().zip(weights) {
        if let Some(v) = v {
            acc.add_scaled(v, w);
        }
    }
    acc
}

fn weights_for(net: &Network, sub: &Subshared, k: usize) -> Result<Vec<u64>, ProtocolError> {
    let need = net.m() + net.t();
    if sub.origins.len() < need {
        return Err(ProtocolError::TooFewSurvivors {
            have: sub.origins.len(),
            need,
        });
    }
    Ok(extraction_weights(
        net.field(),
        &net.alphas(&sub.origins),
        k,
    )?)
}

/// Reverses the block order of a share polynomial, turning a direct share
/// into a reverse one and vice versa.
pub fn recode(
    net: &mut Network,
    mode: Mode,
    x: &SharedValue,
    tag: &str,
) -> Result<SharedValue, ProtocolError> {
    check_plain_share(x, net)?;
    let (m, t) = (net.m(), net.t());
    let shape = x.share_shape();
    let jobs: Vec<SubshareJob> = (0..m)
        .map(|j| SubshareJob {
            name: format!("{tag}/R{j}"),
            values: x.shares.clone(),
            src_deg: m + t - 1,
            delta: m - 1 - j,
            shape,
        })
        .collect();
    let subs = subshare(net, mode, &jobs)?;
    let weights = (0..m)
        .map(|j| weights_for(net, &subs[j], m - 1 - j))
        .collect::<Result<Vec<_>, _>>()?;
    let field = net.field();
    let shares = net
        .active_parties()
        .into_iter()
        .map(|h| {
            let a = net.alpha(h);
            let mut acc = zeros(field, shape);
            for j in 0..m {
                acc.add_scaled(
                    &gather(net, &subs[j], h, &weights[j], shape),
                    field.pow(a, j as u64),
                );
            }
            (h, acc)
        })
        .collect();
    let label = ShareLabel::new(m, t, 0, x.label.dir.flipped());
    Ok(SharedValue {
        label,
        shape: x.shape,
        shares,
    })
}

/// Shares of `Aᵀ` from a direct share of a square `A`.
pub fn transpose(
    net: &mut Network,
    mode: Mode,
    x: &SharedValue,
    tag: &str,
) -> Result<SharedValue, ProtocolError> {
    check_operand(x, net, Direction::Direct, "transpose input")?;
    let (m, t) = (net.m(), net.t());
    if x.shape.0 != x.shape.1 {
        return Err(ProtocolError::ParameterViolation(format!(
            "transpose input {:?} is not square",
            x.shape
        )));
    }
    let w = x.share_shape().1;
    let block = (w, w);
    let jobs: Vec<SubshareJob> = (0..m)
        .map(|i| SubshareJob {
            name: format!("{tag}/T{i}"),
            values: x
                .shares
                .iter()
                .map(|(&p, v)| {
                    (
                        p,
                        v.block_split(m, Axis::Rows).expect("divisible")[i].clone(),
                    )
                })
                .collect(),
            src_deg: m + t - 1,
            delta: m - 1 - i,
            shape: block,
        })
        .collect();
    let subs = subshare(net, mode, &jobs)?;
    // weights[i][l]: extract coefficient l of row block i
    let weights = subs
        .iter()
        .map(|s| {
            (0..m)
                .map(|l| weights_for(net, s, l))
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    let field = net.field();
    let shares = net
        .active_parties()
        .into_iter()
        .map(|h| {
            let a = net.alpha(h);
            let parts: Vec<FMatrix> = (0..m)
                .map(|l| {
                    let mut p = zeros(field, block);
                    for i in 0..m {
                        p.add_scaled(
                            &gather(net, &subs[i], h, &weights[i][l], block),
                            field.pow(a, i as u64),
                        );
                    }
                    p.transpose()
                })
                .collect();
            (h, FMatrix::vconcat(&parts).expect("equal widths"))
        })
        .collect();
    Ok(SharedValue {
        label: ShareLabel::new(m, t, 0, Direction::Direct),
        shape: x.shape,
        shares,
    })
}

// ---------------------------------------------------------------------------
// Programs

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ProgramOp {
    Share {
        input: String,
        dir: Direction,
        out: String,
    },
    Mul {
        lhs: String,
        rhs: String,
        out: String,
    },
    Add {
        lhs: String,
        rhs: String,
        out: String,
    },
    Transpose {
        arg: String,
        out: String,
    },
    DirectToReverse {
        arg: String,
        out: String,
    },
    ReverseToDirect {
        arg: String,
        out: String,
    },
    Reveal {
        arg: String,
    },
}

fn lookup<'a, T>(regs: &'a HashMap<String, T>, name: &str) -> Result<&'a T, ProtocolError> {
    regs.get(name)
        .ok_or_else(|| ProtocolError::ParameterViolation(format!("unknown register {name}")))
}

/// Runs `program` on the network; returns the master's outputs in order.
pub fn run_program(
    net: &mut Network,
    mode: Mode,
    program: &[ProgramOp],
    inputs: &[(String, FMatrix)],
) -> Result<Vec<(String, FMatrix)>, ProtocolError> {
    let mut regs: HashMap<String, SharedValue> = HashMap::new();
    let mut outputs = Vec::new();
    for (i, op) in program.iter().enumerate() {
        let tag = format!("op{i}");
        match op {
            ProgramOp::Share { input, dir, out } => {
                let source = inputs.iter().position(|(n, _)| n == input).ok_or_else(|| {
                    ProtocolError::ParameterViolation(format!("unknown input {input}"))
                })?;
                let v = share_input(net, source, &inputs[source].1, *dir, &tag)?;
                regs.insert(out.clone(), v);
            }
            ProgramOp::Mul { lhs, rhs, out } => {
                let (a, b) = (lookup(&regs, lhs)?.clone(), lookup(&regs, rhs)?.clone());
                let v = multiply(net, mode, &a, &b, &tag)?;
                regs.insert(out.clone(), v);
            }
            ProgramOp::Add { lhs, rhs, out } => {
                let v = add(lookup(&regs, lhs)?, lookup(&regs, rhs)?)?;
                regs.insert(out.clone(), v);
            }
            ProgramOp::Transpose { arg, out } => {
                let x = lookup(&regs, arg)?.clone();
                let v = transpose(net, mode, &x, &tag)?;
                regs.insert(out.clone(), v);
            }
            ProgramOp::DirectToReverse { arg, out } | ProgramOp::ReverseToDirect { arg, out } => {
                let x = lookup(&regs, arg)?.clone();
                let want = if matches!(op, ProgramOp::DirectToReverse { .. }) {
                    Direction::Direct
                } else {
                    Direction::Reverse
                };
                if x.label.dir != want {
                    return Err(ProtocolError::LabelMismatch(format!(
                        "{arg} is not a {want} share"
                    )));
                }
                let v = recode(net, mode, &x, &tag)?;
                regs.insert(out.clone(), v);
            }
            ProgramOp::Reveal { arg } => {
                let x = lookup(&regs, arg)?.clone();
                outputs.push((arg.clone(), reveal(net, &x, arg)?));
            }
        }
    }
    Ok(outputs)
}

/// Evaluates a program on plain matrices.
pub fn direct_eval(
    program: &[ProgramOp],
    inputs: &[(String, FMatrix)],
) -> Result<Vec<(String, FMatrix)>, String> {
    let mut regs: HashMap<String, FMatrix> = HashMap::new();
    let mut outputs = Vec::new();
    let get = |regs: &HashMap<String, FMatrix>, n: &str| {
        regs.get(n)
            .cloned()
            .ok_or_else(|| format!("unknown register {n}"))
    };
    for op in program {
        match op {
            ProgramOp::Share { input, out, .. } => {
                let v = inputs
                    .iter()
                    .find(|(n, _)| n == input)
                    .ok_or_else(|| format!("unknown input {input}"))?;
                regs.insert(out.clone(), v.1.clone());
            }
            ProgramOp::Mul { lhs, rhs, out } => {
                let v = get(&regs, lhs)?
                    .mul(&get(&regs, rhs)?.transpose())
                    .map_err(|e| e.to_string())?;
                regs.insert(out.clone(), v);
            }
            ProgramOp::Add { lhs, rhs, out } => {
                let v = get(&regs, lhs)?
                    .add(&get(&regs, rhs)?)
                    .map_err(|e| e.to_string())?;
                regs.insert(out.clone(), v);
            }
            ProgramOp::Transpose { arg, out } => {
                let v = get(&regs, arg)?.transpose();
                regs.insert(out.clone(), v);
            }
            ProgramOp::DirectToReverse { arg, out } | ProgramOp::ReverseToDirect { arg, out } => {
                let v = get(&regs, arg)?;
                regs.insert(out.clone(), v);
            }
            ProgramOp::Reveal { arg } => outputs.push((arg.clone(), get(&regs, arg)?)),
        }
    }
    Ok(outputs)
}

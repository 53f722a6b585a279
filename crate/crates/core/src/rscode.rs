//! Evaluation codes over GF(p): generator and parity-check matrices for
//! (possibly gapped) exponent sets, syndromes, and Berlekamp-Welch decoding.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::gf::{FMatrix, Field};
use crate::poly::{interpolate, MatPoly, PolyError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RsError {
    #[error("degenerate code parameters: {0}")]
    DegenerateParameters(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("no polynomial of degree <= {degree} within {budget} errors")]
    DecodingFailure { degree: usize, budget: usize },
    #[error(transparent)]
    Poly(#[from] PolyError),
}

/// Strictly increasing list of allowed powers of `x`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExponentSet(Vec<usize>);

impl ExponentSet {
    pub fn new(exps: Vec<usize>) -> Result<Self, RsError> {
        if exps.windows(2).any(|w| w[0] >= w[1]) {
            return Err(RsError::DegenerateParameters(
                "exponents must be strictly increasing".into(),
            ));
        }
        Ok(ExponentSet(exps))
    }

    /// `{0, 1, ..., degree}`.
    pub fn contiguous(degree: usize) -> Self {
        ExponentSet((0..=degree).collect())
    }

    /// `{0, zeta, zeta+1, ..., zeta+t-1}`: a constant term, then a gap, then
    /// `t` free powers.
    pub fn gapped(zeta: usize, t: usize) -> Self {
        let mut v = vec![0];
        v.extend((zeta..zeta + t).filter(|&e| e > 0));
        ExponentSet(v)
    }

    pub fn exps(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Clone, Debug)]
pub struct RsCode {
    field: Field,
    alphas: Vec<u64>,
    exponents: ExponentSet,
    g: FMatrix,
    h: FMatrix,
    /// Right inverse of `h`: `h * h_pinv = I`.
    h_pinv: FMatrix,
}

impl RsCode {
    pub fn build(field: Field, alphas: &[u64], exponents: ExponentSet) -> Result<Self, RsError> {
        let n = alphas.len();
        if n == 0 {
            return Err(RsError::DegenerateParameters("no evaluation points".into()));
        }
        if exponents.len() > n {
            return Err(RsError::DegenerateParameters(format!(
                "{} exponents for {n} points",
                exponents.len()
            )));
        }
        let p = field.modulus();
        if exponents.exps().last().is_some_and(|&e| e as u64 >= p - 1) {
            return Err(RsError::DegenerateParameters(
                "exponent must stay below p-1".into(),
            ));
        }
        let mut seen = BTreeSet::new();
        for &a in alphas {
            if a % p == 0 || !seen.insert(a % p) {
                return Err(RsError::DegenerateParameters(
                    "points must be distinct and nonzero".into(),
                ));
            }
        }
        let g = FMatrix::from_fn(field, exponents.len(), n, |i, j| {
            field.pow(alphas[j], exponents.exps()[i] as u64)
        });
        let h = g.nullspace();
        debug_assert!(g.mul(&h.transpose()).expect("shapes").is_zero());
        let h_pinv = if h.rows() == 0 {
            FMatrix::zeros(field, n, 0)
        } else {
            h.solve(&FMatrix::identity(field, h.rows()))
                .expect("parity-check rows are independent")
        };
        Ok(RsCode {
            field,
            alphas: alphas.to_vec(),
            exponents,
            g,
            h,
            h_pinv,
        })
    }

    pub fn alphas(&self) -> &[u64] {
        &self.alphas
    }

    pub fn exponents(&self) -> &ExponentSet {
        &self.exponents
    }

    pub fn generator(&self) -> &FMatrix {
        &self.g
    }

    pub fn parity_check(&self) -> &FMatrix {
        &self.h
    }

    pub fn n(&self) -> usize {
        self.alphas.len()
    }

    /// `Σ_j H[r][j] word[j]` for every parity row `r`.
    pub fn syndrome(&self, word: &[FMatrix]) -> Result<Vec<FMatrix>, RsError> {
        check_word(word, self.n())?;
        Ok((0..self.h.rows())
            .map(|r| combine(self.h.row(r), word))
            .collect())
    }

    /// Some word whose syndrome is `syndrome`. It differs from every other
    /// such word by a codeword.
    pub fn preimage(&self, syndrome: &[FMatrix]) -> Result<Vec<FMatrix>, RsError> {
        if syndrome.len() != self.h.rows() {
            return Err(RsError::ShapeMismatch(format!(
                "{} syndrome entries for {} parity rows",
                syndrome.len(),
                self.h.rows()
            )));
        }
        if syndrome.is_empty() {
            return Err(RsError::ShapeMismatch("code has no parity rows".into()));
        }
        check_word(syndrome, syndrome.len())?;
        Ok((0..self.n())
            .map(|j| combine(self.h_pinv.row(j), syndrome))
            .collect())
    }

    /// Codeword for the polynomial with coefficients `msg[i]` at power `exps[i]`.
    pub fn encode(&self, msg: &[FMatrix]) -> Result<Vec<FMatrix>, RsError> {
        if msg.len() != self.exponents.len() {
            return Err(RsError::ShapeMismatch(
                "one coefficient per exponent".into(),
            ));
        }
        check_word(msg, msg.len())?;
        Ok((0..self.n())
            .map(|j| {
                let col: Vec<u64> = (0..self.g.rows()).map(|i| self.g.get(i, j)).collect();
                combine(&col, msg)
            })
            .collect())
    }

    pub fn field(&self) -> Field {
        self.field
    }
}

fn check_word(word: &[FMatrix], n: usize) -> Result<(), RsError> {
    if word.len() != n {
        return Err(RsError::ShapeMismatch(format!(
            "word of length {} for {n} positions",
            word.len()
        )));
    }
    if let Some(first) = word.first() {
        if word.iter().any(|w| w.shape() != first.shape()) {
            return Err(RsError::ShapeMismatch("entries must share a shape".into()));
        }
    }
    Ok(())
}

fn combine(weights: &[u64], values: &[FMatrix]) -> FMatrix {
    let first = &values[0];
    let mut acc = FMatrix::zeros(first.field(), first.rows(), first.cols());
    for (&w, v) in weights.iter().zip(values) {
        acc.add_scaled(v, w);
    }
    acc
}

/// Result of unique decoding: the polynomial and the positions (indices into
/// the received word) where it disagrees with what was received.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Decoded {
    pub poly: MatPoly,
    pub errors: BTreeSet<usize>,
}

/// Largest error budget that keeps decoding unique.
pub fn max_errors(n: usize, degree: usize) -> usize {
    n.saturating_sub(degree + 1) / 2
}

/// Unique decoding of a matrix-valued word against polynomials of degree at
/// most `degree`. Entries are decoded independently and error positions are
/// the union over entries. Missing values should be passed as zero matrices.
pub fn decode(
    field: Field,
    degree: usize,
    alphas: &[u64],
    received: &[FMatrix],
    e_max: usize,
) -> Result<Decoded, RsError> {
    let n = alphas.len();
    check_word(received, n)?;
    if n < degree + 1 + 2 * e_max {
        return Err(RsError::DegenerateParameters(format!(
            "{n} points cannot decode degree {degree} with {e_max} errors"
        )));
    }
    let (r, c) = received[0].shape();

    // Fast path: the interpolant through the first degree+1 points usually
    // explains the whole word.
    let head = interpolate(field, &alphas[..degree + 1], &received[..degree + 1])?;
    let errs = disagreements(&head, alphas, received);
    if errs.len() <= e_max {
        return Ok(Decoded {
            poly: head,
            errors: errs,
        });
    }

    let mut coeffs = vec![FMatrix::zeros(field, r, c); degree + 1];
    for i in 0..r {
        for j in 0..c {
            let ys: Vec<u64> = received.iter().map(|m| m.get(i, j)).collect();
            let p = berlekamp_welch(field, degree, alphas, &ys, e_max).ok_or(
                RsError::DecodingFailure {
                    degree,
                    budget: e_max,
                },
            )?;
            for (k, v) in p.into_iter().enumerate() {
                coeffs[k].set(i, j, v);
            }
        }
    }
    let poly = MatPoly::new(field, r, c, coeffs)?;
    let errors = disagreements(&poly, alphas, received);
    Ok(Decoded { poly, errors })
}

fn disagreements(p: &MatPoly, alphas: &[u64], received: &[FMatrix]) -> BTreeSet<usize> {
    alphas
        .iter()
        .zip(received)
        .enumerate()
        .filter(|(_, (&a, y))| p.eval(a) != **y)
        .map(|(i, _)| i)
        .collect()
}

/// Scalar Berlekamp-Welch. Returns coefficients of the unique polynomial of
/// degree at most `degree` within `e` errors of `ys`, if one exists.
fn berlekamp_welch(
    field: Field,
    degree: usize,
    xs: &[u64],
    ys: &[u64],
    e: usize,
) -> Option<Vec<u64>> {
    let f = field;
    let n = xs.len();
    // Unknowns: E_0..E_{e-1} (E monic of degree e), Q_0..Q_{degree+e}.
    // Q(x_i) - y_i (E_0 + ... + E_{e-1} x_i^{e-1}) = y_i x_i^e
    let nq = degree + e + 1;
    let cols = e + nq;
    let mut a = FMatrix::zeros(f, n, cols);
    let mut b = FMatrix::zeros(f, n, 1);
    for i in 0..n {
        let mut pw = 1;
        for k in 0..cols.max(e + 1) {
            if k < e {
                a.set(i, k, f.neg(f.mul(ys[i], pw)));
            }
            if k < nq {
                a.set(i, e + k, pw);
            }
            if k == e {
                b.set(i, 0, f.mul(ys[i], pw));
            }
            pw = f.mul(pw, xs[i]);
        }
    }
    let sol = a.solve(&b)?;
    let mut ecoef: Vec<u64> = (0..e).map(|k| sol.get(k, 0)).collect();
    ecoef.push(1);
    let qcoef: Vec<u64> = (0..nq).map(|k| sol.get(e + k, 0)).collect();
    let (quot, rem) = poly_divmod(f, &qcoef, &ecoef);
    if rem.iter().any(|&v| v != 0) {
        return None;
    }
    let mut quot = quot;
    while quot.last() == Some(&0) {
        quot.pop();
    }
    if quot.len() > degree + 1 {
        return None;
    }
    quot.resize(degree + 1, 0);
    let bad = xs
        .iter()
        .zip(ys)
        .filter(|(&x, &y)| {
            let mut acc = 0;
            for &c in quot.iter().rev() {
                acc = f.add(f.mul(acc, x), c);
            }
            acc != y
        })
        .count();
    (bad <= e).then_some(quot)
}

/// Division of scalar polynomials (lowest power first) by a monic divisor.
fn poly_divmod(f: Field, num: &[u64], den: &[u64]) -> (Vec<u64>, Vec<u64>) {
    let dd = den.len() - 1;
    let mut rem = num.to_vec();
    if rem.len() <= dd {
        return (vec![0], rem);
    }
    let mut quot = vec![0u64; rem.len() - dd];
    for k in (0..quot.len()).rev() {
        let c = rem[k + dd];
        quot[k] = c;
        if c != 0 {
            for (j, &dj) in den.iter().enumerate() {
                rem[k + j] = f.sub(rem[k + j], f.mul(c, dj));
            }
        }
    }
    rem.truncate(dd);
    (quot, rem)
}

/// Locates the error of weight at most `e_max` behind a syndrome of the
/// contiguous code `{0..degree}`: builds some word with that syndrome and
/// decodes it. The returned polynomial is only meaningful up to a codeword;
/// the error positions are exact.
pub fn locate_errors(
    code: &RsCode,
    degree: usize,
    syndrome: &[FMatrix],
    e_max: usize,
) -> Result<Decoded, RsError> {
    let w = code.preimage(syndrome)?;
    decode(code.field(), degree, code.alphas(), &w, e_max)
}

//! Polynomial sharing of column-partitioned matrices: data blocks in the low
//! coefficients (in order or reversed), an optional run of zero coefficients,
//! then uniform masks.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coins::Randomness;
use crate::gf::{Axis, FMatrix, Field, GfError};
use crate::poly::{interpolate, MatPoly, PolyError};
use crate::rscode::{decode, max_errors, RsError};

pub type PartyId = usize;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SharingError {
    #[error("need {need} shares, got {got}")]
    InsufficientShares { need: usize, got: usize },
    #[error("shares do not lie on a well-formed share polynomial")]
    InconsistentShares,
    #[error("shares carry different labels")]
    LabelMismatch,
    #[error(transparent)]
    Field(#[from] GfError),
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Code(#[from] RsError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Direct,
    Reverse,
}

impl Direction {
    pub fn flipped(self) -> Self {
        match self {
            Direction::Direct => Direction::Reverse,
            Direction::Reverse => Direction::Direct,
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Direct => "direct",
            Direction::Reverse => "reverse",
        })
    }
}

/// Parameters of a share polynomial: `m` data blocks, `delta` zero
/// coefficients, `t` masks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ShareLabel {
    pub m: usize,
    pub t: usize,
    pub delta: usize,
    pub dir: Direction,
}

impl ShareLabel {
    pub fn new(m: usize, t: usize, delta: usize, dir: Direction) -> Self {
        assert!(m >= 1, "at least one data block");
        ShareLabel { m, t, delta, dir }
    }

    /// Degree bound of the share polynomial.
    pub fn degree(&self) -> usize {
        self.m + self.delta + self.t - 1
    }

    /// Number of shares needed to reconstruct.
    pub fn threshold(&self) -> usize {
        self.m + self.delta + self.t
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Share {
    pub label: ShareLabel,
    pub owner: PartyId,
    pub point: u64,
    pub value: FMatrix,
}

/// Share polynomial of `x`: blocks at powers `0..m` (reversed for
/// [`Direction::Reverse`]), zeros at `m..m+delta`, uniform masks above.
pub fn make_share_poly(
    x: &FMatrix,
    label: ShareLabel,
    rng: &mut dyn Randomness,
) -> Result<MatPoly, SharingError> {
    let field = x.field();
    let mut blocks = x.block_split(label.m, Axis::Cols)?;
    if label.dir == Direction::Reverse {
        blocks.reverse();
    }
    let (r, c) = blocks[0].shape();
    let mut coeffs = blocks;
    coeffs.extend((0..label.delta).map(|_| FMatrix::zeros(field, r, c)));
    coeffs.extend((0..label.t).map(|_| rng.matrix(field, r, c)));
    Ok(MatPoly::new(field, r, c, coeffs)?)
}

/// Reassembles the secret from the data coefficients of a share polynomial.
pub fn assemble(poly: &MatPoly, label: ShareLabel) -> Result<FMatrix, SharingError> {
    let mut blocks: Vec<FMatrix> = (0..label.m).map(|j| poly.coeff(j)).collect();
    if label.dir == Direction::Reverse {
        blocks.reverse();
    }
    Ok(FMatrix::hconcat(&blocks)?)
}

fn well_formed(poly: &MatPoly, label: ShareLabel) -> bool {
    let gap_ok = (label.m..label.m + label.delta).all(|k| poly.coeff(k).is_zero());
    gap_ok && poly.len() <= label.degree() + 1
}

/// Plain reconstruction from at least `label.threshold()` shares. All shares
/// are interpolated, so any extra share must agree with the rest.
pub fn reconstruct(shares: &[Share], label: ShareLabel) -> Result<FMatrix, SharingError> {
    if shares.len() < label.threshold() {
        return Err(SharingError::InsufficientShares {
            need: label.threshold(),
            got: shares.len(),
        });
    }
    if shares.iter().any(|s| s.label != label) {
        return Err(SharingError::LabelMismatch);
    }
    let field = shares[0].value.field();
    let points: Vec<u64> = shares.iter().map(|s| s.point).collect();
    let values: Vec<FMatrix> = shares.iter().map(|s| s.value.clone()).collect();
    let poly = interpolate(field, &points, &values)?;
    if !well_formed(&poly, label) {
        return Err(SharingError::InconsistentShares);
    }
    assemble(&poly, label)
}

/// Error-correcting reconstruction: decodes with degree `label.degree()` and
/// budget `t`, returning the secret and the owners of disagreeing shares.
pub fn robust_reconstruct(
    shares: &[Share],
    label: ShareLabel,
    t: usize,
) -> Result<(FMatrix, BTreeSet<PartyId>), SharingError> {
    let need = label.threshold() + 2 * t;
    if shares.len() < need {
        return Err(SharingError::InsufficientShares {
            need,
            got: shares.len(),
        });
    }
    if shares.iter().any(|s| s.label != label) {
        return Err(SharingError::LabelMismatch);
    }
    let field: Field = shares[0].value.field();
    let points: Vec<u64> = shares.iter().map(|s| s.point).collect();
    let values: Vec<FMatrix> = shares.iter().map(|s| s.value.clone()).collect();
    let budget = t.max(max_errors(shares.len(), label.degree()));
    let d = decode(field, label.degree(), &points, &values, budget)?;
    if !well_formed(&d.poly, label) {
        return Err(SharingError::InconsistentShares);
    }
    let corrupted = d.errors.iter().map(|&i| shares[i].owner).collect();
    Ok((assemble(&d.poly, label)?, corrupted))
}

/// Evaluates a share polynomial at the points of parties `1..=n`.
pub fn issue_shares(poly: &MatPoly, label: ShareLabel, n: usize) -> Vec<Share> {
    let field = poly.field();
    (1..=n)
        .map(|owner| {
            let point = field.alpha(owner);
            Share {
                label,
                owner,
                point,
                value: poly.eval(point),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coins::TapeCoins;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn row(f: Field, v: &[u64]) -> FMatrix {
        FMatrix::from_rows(f, &[v.to_vec()]).unwrap()
    }

    #[test]
    fn no_randomness_examples() {
        let f = Field::new(7).unwrap();
        let x = row(f, &[3, 5]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let d = make_share_poly(&x, ShareLabel::new(2, 0, 0, Direction::Direct), &mut rng).unwrap();
        assert_eq!(d, MatPoly::from_coeffs(vec![row(f, &[3]), row(f, &[5])]));
        let r =
            make_share_poly(&x, ShareLabel::new(2, 0, 0, Direction::Reverse), &mut rng).unwrap();
        assert_eq!(r, MatPoly::from_coeffs(vec![row(f, &[5]), row(f, &[3])]));
    }

    #[test]
    fn gap_is_zero() {
        let f = Field::new(11).unwrap();
        let x = row(f, &[4]);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let label = ShareLabel::new(1, 2, 2, Direction::Direct);
        let p = make_share_poly(&x, label, &mut rng).unwrap();
        assert!(p.coeff(1).is_zero() && p.coeff(2).is_zero());
        assert!(p.len() <= label.degree() + 1);
    }

    #[test]
    fn single_share_is_uniform() {
        // m=1, t=1: enumerate the mask over GF(5); the share at any point
        // takes every value exactly once.
        let f = Field::new(5).unwrap();
        let x = FMatrix::scalar(f, 2);
        let label = ShareLabel::new(1, 1, 0, Direction::Direct);
        for alpha in 1..5 {
            let mut seen = [0; 5];
            for r in 0..5 {
                let mut tape = TapeCoins::new(vec![r], Default::default());
                let p = make_share_poly(
                    &x,
                    label,
                    &mut crate::coins::Stream::new(&mut tape, crate::coins::Actor::Source(0), ""),
                )
                .unwrap();
                seen[p.eval(alpha).get(0, 0) as usize] += 1;
            }
            assert_eq!(seen, [1; 5]);
        }
    }

    #[test]
    fn reconstruct_examples() {
        let f = Field::new(11).unwrap();
        let x = FMatrix::from_rows(f, &[vec![1, 2], vec![3, 4]]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let label = ShareLabel::new(2, 1, 0, Direction::Reverse);
        let p = make_share_poly(&x, label, &mut rng).unwrap();
        let shares = issue_shares(&p, label, 5);
        assert_eq!(reconstruct(&shares[..3], label).unwrap(), x);
        assert_eq!(
            reconstruct(&shares[..2], label),
            Err(SharingError::InsufficientShares { need: 3, got: 2 })
        );

        let one = ShareLabel::new(1, 0, 0, Direction::Direct);
        let y = row(f, &[7, 8]);
        let q = make_share_poly(&y, one, &mut rng).unwrap();
        assert_eq!(issue_shares(&q, one, 3)[2].value, y);

        // coefficient in the gap
        let gapped = ShareLabel::new(1, 1, 1, Direction::Direct);
        let bad = MatPoly::from_coeffs(vec![row(f, &[1]), row(f, &[1]), row(f, &[2])]);
        assert_eq!(
            reconstruct(&issue_shares(&bad, gapped, 3), gapped),
            Err(SharingError::InconsistentShares)
        );
    }

    #[test]
    fn robust_reconstruct_flags_garbage() {
        let f = Field::new(13).unwrap();
        let x = FMatrix::from_rows(f, &[vec![1, 2], vec![3, 4]]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let label = ShareLabel::new(2, 1, 0, Direction::Direct);
        let p = make_share_poly(&x, label, &mut rng).unwrap();
        let mut shares = issue_shares(&p, label, 5);
        assert_eq!(
            robust_reconstruct(&shares, label, 1).unwrap(),
            (x.clone(), BTreeSet::new())
        );
        shares[3].value = FMatrix::from_rows(f, &[vec![0], vec![12]]).unwrap();
        assert_eq!(
            robust_reconstruct(&shares, label, 1).unwrap(),
            (x, BTreeSet::from([4]))
        );
    }

    proptest! {
        #[test]
        fn roundtrip(m in 1usize..=3, t in 0usize..=2, delta in 0usize..=2, rev in any::<bool>(), seed in any::<u64>()) {
            let f = Field::new(31).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x = rng.matrix(f, 2, 2 * m);
            let dir = if rev { Direction::Reverse } else { Direction::Direct };
            let label = ShareLabel::new(m, t, delta, dir);
            let p = make_share_poly(&x, label, &mut rng).unwrap();
            prop_assert!(p.len() <= label.degree() + 1);
            let shares = issue_shares(&p, label, label.threshold() + 2 * t);
            prop_assert_eq!(reconstruct(&shares[..label.threshold()], label).unwrap(), x.clone());
            let mut noisy = shares.clone();
            for s in noisy.iter_mut().take(t) {
                s.value = rng.matrix(f, 2, 2);
            }
            prop_assert_eq!(robust_reconstruct(&noisy, label, t).unwrap().0, x);
        }
    }
}

//! Prime-field scalars and dense row-major matrices.
//!
//! Scalars are plain `u64` values in `[0, p)`; a [`Field`] carries the modulus
//! and performs the arithmetic. Matrices carry their field so mixing moduli is
//! caught at the call site.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GfError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("cannot split {len} into {parts} equal blocks")]
    IndivisibleSplit { len: usize, parts: usize },
    #[error("modulus {0} is not a supported prime")]
    NotPrime(u64),
}

/// GF(p) for a prime `p < 2^62`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Field {
    p: u64,
}

impl Field {
    pub const DEFAULT_PRIME: u64 = 2_147_483_647;

    pub fn new(p: u64) -> Result<Self, GfError> {
        if p >= 1 << 62 || !is_prime(p) {
            return Err(GfError::NotPrime(p));
        }
        Ok(Field { p })
    }

    pub fn modulus(&self) -> u64 {
        self.p
    }

    pub fn elem(&self, v: u64) -> u64 {
        v % self.p
    }

    pub fn from_i64(&self, v: i64) -> u64 {
        v.rem_euclid(self.p as i64) as u64
    }

    /// Evaluation point of party `n` (parties are numbered from 1).
    pub fn alpha(&self, n: usize) -> u64 {
        self.elem(n as u64)
    }

    #[inline]
    pub fn add(&self, a: u64, b: u64) -> u64 {
        let s = a + b;
        if s >= self.p {
            s - self.p
        } else {
            s
        }
    }

    #[inline]
    pub fn sub(&self, a: u64, b: u64) -> u64 {
        if a >= b {
            a - b
        } else {
            a + self.p - b
        }
    }

    #[inline]
    pub fn neg(&self, a: u64) -> u64 {
        if a == 0 {
            0
        } else {
            self.p - a
        }
    }

    #[inline]
    pub fn mul(&self, a: u64, b: u64) -> u64 {
        if self.p <= 1 << 32 {
            (a * b) % self.p
        } else {
            ((a as u128 * b as u128) % self.p as u128) as u64
        }
    }

    pub fn pow(&self, mut base: u64, mut exp: u64) -> u64 {
        let mut acc = 1 % self.p;
        base %= self.p;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            exp >>= 1;
        }
        acc
    }

    /// Inverse by Fermat: `a^(p-2)`.
    pub fn inv(&self, a: u64) -> Result<u64, GfError> {
        if a.is_multiple_of(self.p) {
            return Err(GfError::DivisionByZero);
        }
        Ok(self.pow(a, self.p - 2))
    }

    pub fn div(&self, a: u64, b: u64) -> Result<u64, GfError> {
        Ok(self.mul(a, self.inv(b)?))
    }
}

fn mulmod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn powmod(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut acc = 1 % m;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            acc = mulmod(acc, b, m);
        }
        b = mulmod(b, b, m);
        e >>= 1;
    }
    acc
}

/// Deterministic Miller-Rabin, exact for all 64-bit inputs.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for q in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n.is_multiple_of(q) {
            return n == q;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d.is_multiple_of(2) {
        d /= 2;
        s += 1;
    }
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = powmod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mulmod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    Rows,
    Cols,
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct FMatrix {
    field: Field,
    rows: usize,
    cols: usize,
    data: Vec<u64>,
}

impl fmt::Debug for FMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for i in 0..self.rows {
            if i > 0 {
                write!(f, "; ")?;
            }
            for j in 0..self.cols {
                if j > 0 {
                    write!(f, " ")?;
                }
                write!(f, "{}", self.get(i, j))?;
            }
        }
        write!(f, "]")
    }
}

impl FMatrix {
    /// Builds a matrix from row-major data, reducing every entry mod p.
    pub fn new(field: Field, rows: usize, cols: usize, data: Vec<u64>) -> Result<Self, GfError> {
        if data.len() != rows * cols {
            return Err(GfError::DimensionMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        let data = data.into_iter().map(|v| field.elem(v)).collect();
        Ok(FMatrix {
            field,
            rows,
            cols,
            data,
        })
    }

    pub fn from_rows(field: Field, rows: &[Vec<u64>]) -> Result<Self, GfError> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        if rows.iter().any(|row| row.len() != c) {
            return Err(GfError::DimensionMismatch("ragged rows".into()));
        }
        FMatrix::new(field, r, c, rows.concat())
    }

    pub fn from_fn(
        field: Field,
        rows: usize,
        cols: usize,
        mut f: impl FnMut(usize, usize) -> u64,
    ) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(field.elem(f(i, j)));
            }
        }
        FMatrix {
            field,
            rows,
            cols,
            data,
        }
    }

    pub fn zeros(field: Field, rows: usize, cols: usize) -> Self {
        FMatrix {
            field,
            rows,
            cols,
            data: vec![0; rows * cols],
        }
    }

    pub fn identity(field: Field, n: usize) -> Self {
        FMatrix::from_fn(field, n, n, |i, j| u64::from(i == j))
    }

    pub fn scalar(field: Field, v: u64) -> Self {
        FMatrix::from_fn(field, 1, 1, |_, _| v)
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn data(&self) -> &[u64] {
        &self.data
    }

    pub fn get(&self, i: usize, j: usize) -> u64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: u64) {
        self.data[i * self.cols + j] = self.field.elem(v);
    }

    pub fn row(&self, i: usize) -> &[u64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&v| v == 0)
    }

    fn same_shape(&self, other: &FMatrix, what: &str) -> Result<(), GfError> {
        if self.shape() != other.shape() || self.field != other.field {
            return Err(GfError::DimensionMismatch(format!(
                "{what}: {}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &FMatrix) -> Result<FMatrix, GfError> {
        self.same_shape(other, "add")?;
        let f = self.field;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| f.add(a, b))
            .collect();
        Ok(FMatrix { data, ..*self })
    }

    pub fn sub(&self, other: &FMatrix) -> Result<FMatrix, GfError> {
        self.same_shape(other, "sub")?;
        let f = self.field;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| f.sub(a, b))
            .collect();
        Ok(FMatrix { data, ..*self })
    }

    /// `self += c * other`. Panics on a shape mismatch; callers validate
    /// untrusted shapes before arithmetic.
    pub fn add_scaled(&mut self, other: &FMatrix, c: u64) {
        assert_eq!(self.shape(), other.shape(), "add_scaled shape mismatch");
        let f = self.field;
        if c == 0 {
            return;
        }
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a = f.add(*a, f.mul(b, c));
        }
    }

    pub fn scale(&self, c: u64) -> FMatrix {
        let f = self.field;
        let c = f.elem(c);
        let data = self.data.iter().map(|&a| f.mul(a, c)).collect();
        FMatrix { data, ..*self }
    }

    pub fn neg(&self) -> FMatrix {
        let f = self.field;
        let data = self.data.iter().map(|&a| f.neg(a)).collect();
        FMatrix { data, ..*self }
    }

    pub fn mul(&self, other: &FMatrix) -> Result<FMatrix, GfError> {
        if self.cols != other.rows || self.field != other.field {
            return Err(GfError::DimensionMismatch(format!(
                "mul: {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let f = self.field;
        let mut out = FMatrix::zeros(f, self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0 {
                    continue;
                }
                let orow = other.row(k);
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, &b) in dst.iter_mut().zip(orow) {
                    *d = f.add(*d, f.mul(a, b));
                }
            }
        }
        Ok(out)
    }

    pub fn transpose(&self) -> FMatrix {
        FMatrix::from_fn(self.field, self.cols, self.rows, |i, j| self.get(j, i))
    }

    pub fn hconcat(parts: &[FMatrix]) -> Result<FMatrix, GfError> {
        let first = parts
            .first()
            .ok_or_else(|| GfError::DimensionMismatch("hconcat of nothing".into()))?;
        if parts
            .iter()
            .any(|p| p.rows != first.rows || p.field != first.field)
        {
            return Err(GfError::DimensionMismatch(
                "hconcat row counts differ".into(),
            ));
        }
        let cols = parts.iter().map(|p| p.cols).sum();
        let mut data = Vec::with_capacity(first.rows * cols);
        for i in 0..first.rows {
            for p in parts {
                data.extend_from_slice(p.row(i));
            }
        }
        Ok(FMatrix {
            field: first.field,
            rows: first.rows,
            cols,
            data,
        })
    }

    pub fn vconcat(parts: &[FMatrix]) -> Result<FMatrix, GfError> {
        let first = parts
            .first()
            .ok_or_else(|| GfError::DimensionMismatch("vconcat of nothing".into()))?;
        if parts
            .iter()
            .any(|p| p.cols != first.cols || p.field != first.field)
        {
            return Err(GfError::DimensionMismatch(
                "vconcat column counts differ".into(),
            ));
        }
        let rows = parts.iter().map(|p| p.rows).sum();
        let data = parts.iter().flat_map(|p| p.data.iter().copied()).collect();
        Ok(FMatrix {
            field: first.field,
            rows,
            cols: first.cols,
            data,
        })
    }

    /// Splits into `k` equal blocks along `axis`, in order.
    pub fn block_split(&self, k: usize, axis: Axis) -> Result<Vec<FMatrix>, GfError> {
        let len = match axis {
            Axis::Rows => self.rows,
            Axis::Cols => self.cols,
        };
        if k == 0 || len % k != 0 {
            return Err(GfError::IndivisibleSplit { len, parts: k });
        }
        let w = len / k;
        Ok((0..k)
            .map(|b| match axis {
                Axis::Cols => {
                    FMatrix::from_fn(self.field, self.rows, w, |i, j| self.get(i, b * w + j))
                }
                Axis::Rows => {
                    FMatrix::from_fn(self.field, w, self.cols, |i, j| self.get(b * w + i, j))
                }
            })
            .collect())
    }

    /// Reduced row echelon form in place; returns the pivot columns.
    fn rref(&mut self) -> Vec<usize> {
        let f = self.field;
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..self.cols {
            if r == self.rows {
                break;
            }
            let Some(pr) = (r..self.rows).find(|&i| self.get(i, c) != 0) else {
                continue;
            };
            if pr != r {
                for j in 0..self.cols {
                    self.data.swap(pr * self.cols + j, r * self.cols + j);
                }
            }
            let inv = f.inv(self.get(r, c)).expect("pivot is nonzero");
            for j in 0..self.cols {
                let v = f.mul(self.get(r, j), inv);
                self.data[r * self.cols + j] = v;
            }
            for i in 0..self.rows {
                if i == r {
                    continue;
                }
                let factor = self.get(i, c);
                if factor == 0 {
                    continue;
                }
                for j in 0..self.cols {
                    let v = f.sub(self.get(i, j), f.mul(factor, self.get(r, j)));
                    self.data[i * self.cols + j] = v;
                }
            }
            pivots.push(c);
            r += 1;
        }
        pivots
    }

    pub fn rank(&self) -> usize {
        self.clone().rref().len()
    }

    /// Rows form a basis of `{v : self * v^T = 0}`.
    pub fn nullspace(&self) -> FMatrix {
        let f = self.field;
        let mut r = self.clone();
        let pivots = r.rref();
        let free: Vec<usize> = (0..self.cols).filter(|c| !pivots.contains(c)).collect();
        let mut basis = FMatrix::zeros(f, free.len(), self.cols);
        for (b, &fc) in free.iter().enumerate() {
            basis.set(b, fc, 1);
            for (pi, &pc) in pivots.iter().enumerate() {
                basis.set(b, pc, f.neg(r.get(pi, fc)));
            }
        }
        basis
    }

    /// Some `X` with `self * X = rhs`, or `None` when the system is inconsistent.
    pub fn solve(&self, rhs: &FMatrix) -> Option<FMatrix> {
        if rhs.rows != self.rows {
            return None;
        }
        let aug = FMatrix::hconcat(&[self.clone(), rhs.clone()]).ok()?;
        let mut r = aug;
        let pivots = r.rref();
        if pivots.iter().any(|&c| c >= self.cols) {
            return None;
        }
        let mut x = FMatrix::zeros(self.field, self.cols, rhs.cols);
        for (pi, &pc) in pivots.iter().enumerate() {
            for j in 0..rhs.cols {
                x.set(pc, j, r.get(pi, self.cols + j));
            }
        }
        Some(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn f7() -> Field {
        Field::new(7).unwrap()
    }

    #[test]
    fn scalar_examples() {
        let f = f7();
        assert_eq!(f.mul(3, 5), 1);
        assert_eq!(f.inv(3).unwrap(), 5);
        assert_eq!(f.pow(3, 6), 1);
        assert_eq!(f.inv(0), Err(GfError::DivisionByZero));
        assert_eq!(f.div(1, 3).unwrap(), 5);
        assert_eq!(f.neg(0), 0);
        assert_eq!(f.from_i64(-1), 6);
    }

    #[test]
    fn rejects_composites() {
        assert!(Field::new(9).is_err());
        assert!(Field::new(1).is_err());
        assert!(Field::new(Field::DEFAULT_PRIME).is_ok());
        assert!(is_prime((1 << 61) - 1));
        assert!(!is_prime(3_215_031_751));
    }

    #[test]
    fn matrix_examples() {
        let f = f7();
        let a = FMatrix::from_rows(f, &[vec![1, 2], vec![3, 4]]).unwrap();
        assert_eq!(a.mul(&FMatrix::identity(f, 2)).unwrap(), a);
        let row = FMatrix::from_rows(f, &[vec![1, 2]]).unwrap();
        assert_eq!(
            row.transpose(),
            FMatrix::from_rows(f, &[vec![1], vec![2]]).unwrap()
        );

        let f5 = Field::new(5).unwrap();
        let x = FMatrix::from_rows(f5, &[vec![1, 2, 3, 4]]).unwrap();
        let parts = x.block_split(2, Axis::Cols).unwrap();
        assert_eq!(parts[0], FMatrix::from_rows(f5, &[vec![1, 2]]).unwrap());
        assert_eq!(parts[1], FMatrix::from_rows(f5, &[vec![3, 4]]).unwrap());
        assert_eq!(
            x.block_split(3, Axis::Cols),
            Err(GfError::IndivisibleSplit { len: 4, parts: 3 })
        );
        assert!(matches!(a.mul(&row), Err(GfError::DimensionMismatch(_))));
    }

    #[test]
    fn nullspace_examples() {
        let f = f7();
        let m = FMatrix::from_rows(f, &[vec![1, 1, 1], vec![1, 2, 3]]).unwrap();
        let ns = m.nullspace();
        assert_eq!(ns.rows(), 1);
        let v = ns.row(0);
        // proportional to (1,5,1)
        let s = f.div(v[0], 1).unwrap();
        assert_eq!(v, &[s, f.mul(5, s), s]);
        assert_eq!(FMatrix::identity(f, 3).nullspace().rows(), 0);
        let z = FMatrix::zeros(f, 2, 3).nullspace();
        assert_eq!(z.rank(), 3);
    }

    #[test]
    fn solve_finds_solution_or_none() {
        let f = f7();
        let a = FMatrix::from_rows(f, &[vec![1, 1], vec![2, 2]]).unwrap();
        let b = FMatrix::from_rows(f, &[vec![3], vec![6]]).unwrap();
        let x = a.solve(&b).unwrap();
        assert_eq!(a.mul(&x).unwrap(), b);
        let bad = FMatrix::from_rows(f, &[vec![3], vec![5]]).unwrap();
        assert!(a.solve(&bad).is_none());
    }

    fn arb_matrix(p: u64, r: usize, c: usize) -> impl Strategy<Value = FMatrix> {
        let f = Field::new(p).unwrap();
        proptest::collection::vec(0..p, r * c).prop_map(move |d| FMatrix::new(f, r, c, d).unwrap())
    }

    proptest! {
        #[test]
        fn field_axioms(a in 0u64..101, b in 0u64..101, c in 0u64..101) {
            let f = Field::new(101).unwrap();
            prop_assert_eq!(f.add(a, b), f.add(b, a));
            prop_assert_eq!(f.mul(a, f.add(b, c)), f.add(f.mul(a, b), f.mul(a, c)));
            prop_assert_eq!(f.mul(f.mul(a, b), c), f.mul(a, f.mul(b, c)));
            prop_assert_eq!(f.add(f.sub(a, b), b), a);
            if a != 0 {
                prop_assert_eq!(f.mul(a, f.inv(a).unwrap()), 1);
            }
        }

        #[test]
        fn big_prime_inverse(a in 1u64..Field::DEFAULT_PRIME) {
            let f = Field::new(Field::DEFAULT_PRIME).unwrap();
            prop_assert_eq!(f.mul(a, f.inv(a).unwrap()), 1);
        }

        #[test]
        fn split_then_concat_is_identity(m in arb_matrix(11, 4, 6)) {
            for k in [1, 2, 3, 6] {
                let cols = m.block_split(k, Axis::Cols).unwrap();
                prop_assert_eq!(&FMatrix::hconcat(&cols).unwrap(), &m);
            }
            for k in [1, 2, 4] {
                let rows = m.block_split(k, Axis::Rows).unwrap();
                prop_assert_eq!(&FMatrix::vconcat(&rows).unwrap(), &m);
            }
        }

        #[test]
        fn nullspace_rows_annihilate(m in arb_matrix(7, 3, 5)) {
            let ns = m.nullspace();
            prop_assert_eq!(ns.rows(), 5 - m.rank());
            prop_assert!(m.mul(&ns.transpose()).unwrap().is_zero());
            prop_assert_eq!(ns.rank(), ns.rows());
        }

        #[test]
        fn transpose_reverses_products(a in arb_matrix(13, 2, 3), b in arb_matrix(13, 3, 4)) {
            let ab = a.mul(&b).unwrap();
            prop_assert_eq!(ab.transpose(), b.transpose().mul(&a.transpose()).unwrap());
        }
    }
}

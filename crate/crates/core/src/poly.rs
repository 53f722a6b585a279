//! Polynomials with matrix coefficients, bivariate dealing polynomials and
//! Lagrange-style recombination weights.

use thiserror::Error;

use crate::gf::{FMatrix, Field, GfError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PolyError {
    #[error("evaluation points are not distinct")]
    DuplicatePoints,
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("need at least {need} points, got {got}")]
    InsufficientPoints { need: usize, got: usize },
    #[error(transparent)]
    Field(#[from] GfError),
}

/// `Σ coeffs[i] x^i`, with trailing zero coefficients trimmed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MatPoly {
    field: Field,
    rows: usize,
    cols: usize,
    coeffs: Vec<FMatrix>,
}

impl MatPoly {
    pub fn new(
        field: Field,
        rows: usize,
        cols: usize,
        coeffs: Vec<FMatrix>,
    ) -> Result<Self, PolyError> {
        if coeffs
            .iter()
            .any(|c| c.shape() != (rows, cols) || c.field() != field)
        {
            return Err(PolyError::ShapeMismatch(format!(
                "coefficients must all be {rows}x{cols}"
            )));
        }
        let mut p = MatPoly {
            field,
            rows,
            cols,
            coeffs,
        };
        p.trim();
        Ok(p)
    }

    /// Panicking constructor for coefficient lists known to share a shape.
    pub fn from_coeffs(coeffs: Vec<FMatrix>) -> Self {
        let first = coeffs.first().expect("at least one coefficient");
        let (field, (rows, cols)) = (first.field(), first.shape());
        MatPoly::new(field, rows, cols, coeffs).expect("uniform coefficient shapes")
    }

    pub fn zero(field: Field, rows: usize, cols: usize) -> Self {
        MatPoly {
            field,
            rows,
            cols,
            coeffs: Vec::new(),
        }
    }

    pub fn constant(c: FMatrix) -> Self {
        MatPoly::from_coeffs(vec![c])
    }

    fn trim(&mut self) {
        while self.coeffs.last().is_some_and(|c| c.is_zero()) {
            self.coeffs.pop();
        }
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    /// Number of stored coefficients (degree + 1, or 0).
    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeffs(&self) -> &[FMatrix] {
        &self.coeffs
    }

    pub fn coeff(&self, i: usize) -> FMatrix {
        self.coeffs
            .get(i)
            .cloned()
            .unwrap_or_else(|| FMatrix::zeros(self.field, self.rows, self.cols))
    }

    pub fn eval(&self, x: u64) -> FMatrix {
        let f = self.field;
        let mut acc = FMatrix::zeros(f, self.rows, self.cols);
        for c in self.coeffs.iter().rev() {
            acc = acc.scale(x);
            acc.add_scaled(c, 1);
        }
        acc
    }

    pub fn add(&self, other: &MatPoly) -> Result<MatPoly, PolyError> {
        if self.shape() != other.shape() {
            return Err(PolyError::ShapeMismatch("add".into()));
        }
        let n = self.len().max(other.len());
        let coeffs = (0..n)
            .map(|i| self.coeff(i).add(&other.coeff(i)))
            .collect::<Result<_, _>>()?;
        MatPoly::new(self.field, self.rows, self.cols, coeffs)
    }

    pub fn sub(&self, other: &MatPoly) -> Result<MatPoly, PolyError> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> MatPoly {
        MatPoly {
            coeffs: self.coeffs.iter().map(FMatrix::neg).collect(),
            ..self.clone_header()
        }
    }

    pub fn scale(&self, c: u64) -> MatPoly {
        let mut p = MatPoly {
            coeffs: self.coeffs.iter().map(|m| m.scale(c)).collect(),
            ..self.clone_header()
        };
        p.trim();
        p
    }

    /// Multiplies by `x^k`.
    pub fn shift(&self, k: usize) -> MatPoly {
        if self.is_zero() {
            return self.clone();
        }
        let mut coeffs = vec![FMatrix::zeros(self.field, self.rows, self.cols); k];
        coeffs.extend(self.coeffs.iter().cloned());
        MatPoly {
            coeffs,
            ..self.clone_header()
        }
    }

    /// Matrix product of polynomials: `(self * other)(x) = self(x) · other(x)`.
    pub fn mul(&self, other: &MatPoly) -> Result<MatPoly, PolyError> {
        if self.cols != other.rows {
            return Err(PolyError::ShapeMismatch("mul".into()));
        }
        let (rows, cols) = (self.rows, other.cols);
        if self.is_zero() || other.is_zero() {
            return Ok(MatPoly::zero(self.field, rows, cols));
        }
        let mut coeffs = vec![FMatrix::zeros(self.field, rows, cols); self.len() + other.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                let prod = a.mul(b)?;
                coeffs[i + j].add_scaled(&prod, 1);
            }
        }
        MatPoly::new(self.field, rows, cols, coeffs)
    }

    pub fn transpose(&self) -> MatPoly {
        MatPoly {
            field: self.field,
            rows: self.cols,
            cols: self.rows,
            coeffs: self.coeffs.iter().map(FMatrix::transpose).collect(),
        }
    }

    fn clone_header(&self) -> MatPoly {
        MatPoly {
            field: self.field,
            rows: self.rows,
            cols: self.cols,
            coeffs: Vec::new(),
        }
    }
}

/// Bivariate polynomial with `coeffs[i][j]` the coefficient of `x^i y^j`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BiMatPoly {
    degree: usize,
    coeffs: Vec<Vec<FMatrix>>,
}

impl BiMatPoly {
    /// `grid` must be `(d+1) x (d+1)` with a common coefficient shape.
    pub fn new(grid: Vec<Vec<FMatrix>>) -> Result<Self, PolyError> {
        let d1 = grid.len();
        if d1 == 0 || grid.iter().any(|row| row.len() != d1) {
            return Err(PolyError::ShapeMismatch(
                "grid must be square and nonempty".into(),
            ));
        }
        let shape = grid[0][0].shape();
        if grid.iter().flatten().any(|c| c.shape() != shape) {
            return Err(PolyError::ShapeMismatch("coefficient shapes differ".into()));
        }
        Ok(BiMatPoly {
            degree: d1 - 1,
            coeffs: grid,
        })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn coeff(&self, i: usize, j: usize) -> &FMatrix {
        &self.coeffs[i][j]
    }

    fn shape(&self) -> (usize, usize) {
        self.coeffs[0][0].shape()
    }

    fn field(&self) -> Field {
        self.coeffs[0][0].field()
    }

    /// `f(x) = S(x, a)`.
    pub fn fix_y(&self, a: u64) -> MatPoly {
        let f = self.field();
        let (r, c) = self.shape();
        let coeffs = self
            .coeffs
            .iter()
            .map(|row| {
                let mut acc = FMatrix::zeros(f, r, c);
                let mut pw = 1;
                for cij in row {
                    acc.add_scaled(cij, pw);
                    pw = f.mul(pw, a);
                }
                acc
            })
            .collect();
        MatPoly::new(f, r, c, coeffs).expect("uniform shapes")
    }

    /// `g(y) = S(a, y)`.
    pub fn fix_x(&self, a: u64) -> MatPoly {
        let f = self.field();
        let (r, c) = self.shape();
        let d1 = self.degree + 1;
        let mut coeffs = vec![FMatrix::zeros(f, r, c); d1];
        let mut pw = 1;
        for row in &self.coeffs {
            for (j, cij) in row.iter().enumerate() {
                coeffs[j].add_scaled(cij, pw);
            }
            pw = f.mul(pw, a);
        }
        MatPoly::new(f, r, c, coeffs).expect("uniform shapes")
    }

    pub fn eval(&self, x: u64, y: u64) -> FMatrix {
        self.fix_y(y).eval(x)
    }
}

fn check_distinct(points: &[u64]) -> Result<(), PolyError> {
    for (i, a) in points.iter().enumerate() {
        if points[i + 1..].contains(a) {
            return Err(PolyError::DuplicatePoints);
        }
    }
    Ok(())
}

/// Weights `λ` with `Σ λ_i f(points_i) = f(target)` for every `f` of degree
/// below `points.len()`.
pub fn lagrange_coeffs(field: Field, points: &[u64], target: u64) -> Result<Vec<u64>, PolyError> {
    if points.is_empty() {
        return Err(PolyError::InsufficientPoints { need: 1, got: 0 });
    }
    check_distinct(points)?;
    let f = field;
    points
        .iter()
        .enumerate()
        .map(|(i, &xi)| {
            let mut num = 1;
            let mut den = 1;
            for (j, &xj) in points.iter().enumerate() {
                if i != j {
                    num = f.mul(num, f.sub(target, xj));
                    den = f.mul(den, f.sub(xi, xj));
                }
            }
            Ok(f.div(num, den)?)
        })
        .collect()
}

/// Coefficient vectors (lowest power first) of the Lagrange basis polynomials
/// for `points`; row `i` is `L_i`. Equivalently the columns of the inverse
/// Vandermonde matrix.
fn lagrange_basis(field: Field, points: &[u64]) -> Result<Vec<Vec<u64>>, PolyError> {
    check_distinct(points)?;
    let f = field;
    let n = points.len();
    // full(x) = Π (x - x_j)
    let mut full = vec![1u64];
    for &xj in points {
        let mut next = vec![0u64; full.len() + 1];
        for (k, &c) in full.iter().enumerate() {
            next[k + 1] = f.add(next[k + 1], c);
            next[k] = f.sub(next[k], f.mul(c, xj));
        }
        full = next;
    }
    let mut basis = Vec::with_capacity(n);
    for (i, &xi) in points.iter().enumerate() {
        // synthetic division of full by (x - xi)
        let mut quot = vec![0u64; n];
        let mut carry = 0;
        for k in (1..=n).rev() {
            carry = f.add(full[k], f.mul(carry, xi));
            quot[k - 1] = carry;
        }
        let mut den = 1;
        for (j, &xj) in points.iter().enumerate() {
            if i != j {
                den = f.mul(den, f.sub(xi, xj));
            }
        }
        let inv = f.inv(den)?;
        basis.push(quot.into_iter().map(|c| f.mul(c, inv)).collect());
    }
    Ok(basis)
}

/// Weights `w` such that `Σ w_i f(points_i)` is the coefficient of `x^k` in
/// the unique interpolant of degree below `points.len()`.
pub fn extraction_weights(field: Field, points: &[u64], k: usize) -> Result<Vec<u64>, PolyError> {
    if points.len() <= k {
        return Err(PolyError::InsufficientPoints {
            need: k + 1,
            got: points.len(),
        });
    }
    Ok(lagrange_basis(field, points)?
        .into_iter()
        .map(|row| row[k])
        .collect())
}

/// Coefficient `k` of a polynomial of degree at most `degree`, as a fixed
/// linear combination of its values at `points`.
pub fn coeff_extraction_combo(
    shares: &[FMatrix],
    points: &[u64],
    k: usize,
    degree: usize,
) -> Result<FMatrix, PolyError> {
    if points.len() < degree + 1 {
        return Err(PolyError::InsufficientPoints {
            need: degree + 1,
            got: points.len(),
        });
    }
    if shares.len() != points.len() {
        return Err(PolyError::ShapeMismatch("one share per point".into()));
    }
    let first = &shares[0];
    let (field, (r, c)) = (first.field(), first.shape());
    if k > degree {
        return Ok(FMatrix::zeros(field, r, c));
    }
    let w = extraction_weights(field, points, k)?;
    linear_combination(&w, shares)
}

pub fn linear_combination(weights: &[u64], values: &[FMatrix]) -> Result<FMatrix, PolyError> {
    let first = values
        .first()
        .ok_or(PolyError::InsufficientPoints { need: 1, got: 0 })?;
    let mut acc = FMatrix::zeros(first.field(), first.rows(), first.cols());
    for (w, v) in weights.iter().zip(values) {
        if v.shape() != acc.shape() {
            return Err(PolyError::ShapeMismatch("linear combination".into()));
        }
        acc.add_scaled(v, *w);
    }
    Ok(acc)
}

/// Unique polynomial of degree below `points.len()` through the given values.
pub fn interpolate(field: Field, points: &[u64], values: &[FMatrix]) -> Result<MatPoly, PolyError> {
    if points.len() != values.len() {
        return Err(PolyError::ShapeMismatch("one value per point".into()));
    }
    let first = values
        .first()
        .ok_or(PolyError::InsufficientPoints { need: 1, got: 0 })?;
    let (r, c) = first.shape();
    if values.iter().any(|v| v.shape() != (r, c)) {
        return Err(PolyError::ShapeMismatch("values must share a shape".into()));
    }
    let basis = lagrange_basis(field, points)?;
    let n = points.len();
    let mut coeffs = vec![FMatrix::zeros(field, r, c); n];
    for (row, v) in basis.iter().zip(values) {
        for (k, &b) in row.iter().enumerate() {
            coeffs[k].add_scaled(v, b);
        }
    }
    MatPoly::new(field, r, c, coeffs)
}

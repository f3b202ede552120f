//! Dense exact linear algebra over a [`Gf`] and enumeration of subspaces.

use std::fmt;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::{Gf, Scalar};

/// Default cap on the number of candidate subspaces a search may visit.
pub const DEFAULT_BUDGET: u128 = 100_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LinalgError {
    #[error("enumeration of {needed} candidates exceeds the budget of {budget}")]
    BudgetExceeded { needed: u128, budget: u128 },
    #[error("matrix is singular")]
    Singular,
    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<Scalar>,
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<Vec<u32>> = self.row_iter().map(|r| r.iter().map(|s| s.0).collect()).collect();
        write!(f, "Matrix{rows:?}")
    }
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![Scalar::ZERO; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Scalar::ONE;
        }
        m
    }

    pub fn from_rows(cols: usize, rows: Vec<Vec<Scalar>>) -> Self {
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in &rows {
            assert_eq!(r.len(), cols, "ragged matrix rows");
            data.extend_from_slice(r);
        }
        Matrix { rows: rows.len(), cols, data }
    }

    /// Convenience constructor reducing integers into the prime subfield.
    pub fn from_ints(gf: &Gf, rows: &[&[i64]]) -> Self {
        let cols = rows.first().map_or(0, |r| r.len());
        Matrix::from_rows(cols, rows.iter().map(|r| r.iter().map(|&v| gf.from_i64(v)).collect()).collect())
    }

    pub fn from_flat(rows: usize, cols: usize, data: Vec<Scalar>) -> Self {
        assert_eq!(data.len(), rows * cols);
        Matrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[Scalar] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[Scalar] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_iter(&self) -> impl Iterator<Item = &[Scalar]> {
        (0..self.rows).map(move |i| self.row(i))
    }

    pub fn to_rows(&self) -> Vec<Vec<Scalar>> {
        self.row_iter().map(|r| r.to_vec()).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|s| s.is_zero())
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn mul(&self, gf: &Gf, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "matrix product dimension mismatch");
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let cur = out[(i, j)];
                    out[(i, j)] = gf.add(cur, gf.mul(a, other[(k, j)]));
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, gf: &Gf, v: &[Scalar]) -> Vec<Scalar> {
        assert_eq!(self.cols, v.len());
        self.row_iter().map(|r| dot(gf, r, v)).collect()
    }

    /// Stack `other` below `self`.
    pub fn vstack(&self, other: &Matrix) -> Matrix {
        assert!(self.rows == 0 || other.rows == 0 || self.cols == other.cols);
        let cols = if self.rows == 0 { other.cols } else { self.cols };
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        Matrix { rows: self.rows + other.rows, cols, data }
    }

    pub fn select_rows(&self, idx: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Matrix { rows: idx.len(), cols: self.cols, data }
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a != b {
            for j in 0..self.cols {
                self.data.swap(a * self.cols + j, b * self.cols + j);
            }
        }
    }

    /// In-place reduction to RREF; returns the pivot columns.
    pub fn rref_in_place(&mut self, gf: &Gf) -> Vec<usize> {
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..self.cols {
            if r == self.rows {
                break;
            }
            let Some(pr) = (r..self.rows).find(|&i| !self[(i, c)].is_zero()) else {
                continue;
            };
            self.swap_rows(r, pr);
            let inv = gf.inv(self[(r, c)]).expect("nonzero pivot");
            for j in c..self.cols {
                self[(r, j)] = gf.mul(self[(r, j)], inv);
            }
            for i in 0..self.rows {
                if i == r {
                    continue;
                }
                let factor = self[(i, c)];
                if factor.is_zero() {
                    continue;
                }
                for j in c..self.cols {
                    let v = gf.sub(self[(i, j)], gf.mul(factor, self[(r, j)]));
                    self[(i, j)] = v;
                }
            }
            pivots.push(c);
            r += 1;
        }
        pivots
    }

    pub fn rank(&self, gf: &Gf) -> usize {
        let mut m = self.clone();
        m.rref_in_place(gf).len()
    }

    pub fn is_invertible(&self, gf: &Gf) -> bool {
        self.rows == self.cols && self.rank(gf) == self.rows
    }

    pub fn inverse(&self, gf: &Gf) -> Result<Matrix, LinalgError> {
        if self.rows != self.cols {
            return Err(LinalgError::Dimension(format!("{}x{} is not square", self.rows, self.cols)));
        }
        let n = self.rows;
        let mut aug = Matrix::zeros(n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                aug[(i, j)] = self[(i, j)];
            }
            aug[(i, n + i)] = Scalar::ONE;
        }
        let pivots = aug.rref_in_place(gf);
        if pivots.len() < n || !pivots.iter().take(n).copied().eq(0..n) {
            return Err(LinalgError::Singular);
        }
        let mut inv = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                inv[(i, j)] = aug[(i, n + j)];
            }
        }
        Ok(inv)
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = Scalar;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Scalar {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Scalar {
        &mut self.data[i * self.cols + j]
    }
}

pub fn dot(gf: &Gf, a: &[Scalar], b: &[Scalar]) -> Scalar {
    a.iter().zip(b).fold(Scalar::ZERO, |acc, (&x, &y)| gf.add(acc, gf.mul(x, y)))
}

/// Reduced row echelon form of `m` (zero rows kept at the bottom).
pub fn rref(gf: &Gf, m: &Matrix) -> Matrix {
    let mut out = m.clone();
    out.rref_in_place(gf);
    out
}

/// Null space `{v : m v = 0}`.
pub fn kernel(gf: &Gf, m: &Matrix) -> Subspace {
    let n = m.cols();
    let mut r = m.clone();
    let pivots = r.rref_in_place(gf);
    let free: Vec<usize> = (0..n).filter(|c| !pivots.contains(c)).collect();
    let rows = free
        .iter()
        .map(|&f| {
            let mut v = vec![Scalar::ZERO; n];
            v[f] = Scalar::ONE;
            for (i, &pc) in pivots.iter().enumerate() {
                v[pc] = gf.neg(r[(i, f)]);
            }
            v
        })
        .collect();
    Subspace::span(gf, n, rows)
}

/// A linear subspace of `GF(q)^n`, stored as the RREF of a basis. Two
/// subspaces are equal iff their bases are identical.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Subspace {
    ambient: usize,
    basis: Matrix,
}

impl Subspace {
    /// Span of arbitrary vectors (dependent or zero vectors allowed).
    pub fn span(gf: &Gf, ambient: usize, vectors: Vec<Vec<Scalar>>) -> Subspace {
        let mut m = Matrix::from_rows(ambient, vectors);
        let rank = m.rref_in_place(gf).len();
        let keep: Vec<usize> = (0..rank).collect();
        Subspace { ambient, basis: m.select_rows(&keep) }
    }

    pub fn whole(n: usize) -> Subspace {
        Subspace { ambient: n, basis: Matrix::identity(n) }
    }

    pub fn zero(n: usize) -> Subspace {
        Subspace { ambient: n, basis: Matrix::zeros(0, n) }
    }

    /// Wrap a basis already known to be in RREF with no zero rows.
    pub fn from_rref_unchecked(ambient: usize, basis: Matrix) -> Subspace {
        debug_assert_eq!(basis.cols(), ambient);
        Subspace { ambient, basis }
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient
    }

    pub fn dim(&self) -> usize {
        self.basis.rows()
    }

    pub fn codim(&self) -> usize {
        self.ambient - self.dim()
    }

    pub fn basis(&self) -> &Matrix {
        &self.basis
    }

    pub fn pivots(&self) -> Vec<usize> {
        self.basis
            .row_iter()
            .map(|r| r.iter().position(|s| !s.is_zero()).expect("no zero rows"))
            .collect()
    }

    pub fn contains(&self, gf: &Gf, v: &[Scalar]) -> bool {
        let extended = self.basis.vstack(&Matrix::from_rows(self.ambient, vec![v.to_vec()]));
        extended.rank(gf) == self.dim()
    }

    pub fn is_subspace_of(&self, gf: &Gf, other: &Subspace) -> bool {
        self.basis.row_iter().all(|r| other.contains(gf, r))
    }

    pub fn intersect(&self, gf: &Gf, other: &Subspace) -> Subspace {
        // v = a B1 = b B2  <=>  [B1; -B2]^T (a, b) = 0
        let n = self.ambient;
        let k1 = self.dim();
        let k2 = other.dim();
        let mut m = Matrix::zeros(n, k1 + k2);
        for j in 0..n {
            for a in 0..k1 {
                m[(j, a)] = self.basis[(a, j)];
            }
            for b in 0..k2 {
                m[(j, k1 + b)] = gf.neg(other.basis[(b, j)]);
            }
        }
        let ker = kernel(gf, &m);
        let vectors = ker
            .basis
            .row_iter()
            .map(|coeffs| {
                let mut v = vec![Scalar::ZERO; n];
                for a in 0..k1 {
                    for j in 0..n {
                        v[j] = gf.add(v[j], gf.mul(coeffs[a], self.basis[(a, j)]));
                    }
                }
                v
            })
            .collect();
        Subspace::span(gf, n, vectors)
    }
}

/// Invertible `n x n` matrix whose last `dim(w)` rows are `w`'s basis and
/// whose first `codim(w)` rows are standard basis vectors on the non-pivot
/// columns, in increasing column order.
pub fn complete_basis(w: &Subspace) -> Matrix {
    let n = w.ambient_dim();
    let pivots = w.pivots();
    let mut rows = Vec::with_capacity(n);
    for c in (0..n).filter(|c| !pivots.contains(c)) {
        let mut e = vec![Scalar::ZERO; n];
        e[c] = Scalar::ONE;
        rows.push(e);
    }
    rows.extend(w.basis().to_rows());
    Matrix::from_rows(n, rows)
}

/// Number of `k`-dimensional subspaces of an `n`-dimensional space over GF(q).
pub fn gaussian_binomial(n: u32, k: u32, q: u64) -> BigUint {
    assert!(k <= n && q >= 2);
    let q = BigUint::from(q);
    let mut num = BigUint::one();
    let mut den = BigUint::one();
    for i in 0..k {
        num *= q.pow(n - i) - 1u32;
        den *= q.pow(k - i) - 1u32;
    }
    num / den
}

/// Enumeration of all subspaces of a fixed dimension, as RREF bases.
///
/// Order: pivot sets lexicographically, then the free entries as a base-`q`
/// counter read row-major with the first free entry most significant.
#[derive(Debug, Clone)]
pub struct Grassmannian {
    n: usize,
    dim: usize,
    q: u32,
    blocks: Vec<PivotBlock>,
    total: u128,
}

#[derive(Debug, Clone)]
struct PivotBlock {
    pivots: Vec<usize>,
    /// (row, col) of each free entry in counter order.
    free: Vec<(usize, usize)>,
    count: u128,
    offset: u128,
}

/// Chunk size for parallel scans.
const CHUNK: u128 = 4096;

impl Grassmannian {
    /// Subspaces of codimension `codim` in `GF(q)^n`, where `q` is only used
    /// as the alphabet size of the free entries.
    pub fn over_size(n: usize, codim: usize, q: u32) -> Grassmannian {
        assert!(codim <= n);
        let dim = n - codim;
        let mut blocks = Vec::new();
        let mut offset = 0u128;
        for pivots in itertools::Itertools::combinations(0..n, dim) {
            let mut free = Vec::new();
            for (row, &pc) in pivots.iter().enumerate() {
                for c in pc + 1..n {
                    if !pivots.contains(&c) {
                        free.push((row, c));
                    }
                }
            }
            let count = (q as u128).checked_pow(free.len() as u32).unwrap_or(u128::MAX);
            blocks.push(PivotBlock { pivots, free, count, offset });
            offset = offset.saturating_add(count);
        }
        Grassmannian { n, dim, q, blocks, total: offset }
    }

    pub fn new(gf: &Gf, n: usize, codim: usize) -> Grassmannian {
        Grassmannian::over_size(n, codim, gf.order() as u32)
    }

    pub fn len(&self) -> u128 {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ambient_dim(&self) -> usize {
        self.n
    }

    /// Row-major basis of the subspace at position `counter` inside `block`.
    fn decode_into(&self, block: &PivotBlock, mut counter: u128, buf: &mut [Scalar], digits: &mut [u32]) {
        buf.iter_mut().for_each(|s| *s = Scalar::ZERO);
        for (row, &pc) in block.pivots.iter().enumerate() {
            buf[row * self.n + pc] = Scalar::ONE;
        }
        for (idx, &(row, col)) in block.free.iter().enumerate().rev() {
            let d = (counter % self.q as u128) as u32;
            counter /= self.q as u128;
            digits[idx] = d;
            buf[row * self.n + col] = Scalar(d);
        }
    }

    /// Advance the counter; returns false on wrap-around.
    fn increment(&self, block: &PivotBlock, buf: &mut [Scalar], digits: &mut [u32]) -> bool {
        for idx in (0..block.free.len()).rev() {
            let (row, col) = block.free[idx];
            digits[idx] += 1;
            if digits[idx] == self.q {
                digits[idx] = 0;
                buf[row * self.n + col] = Scalar::ZERO;
            } else {
                buf[row * self.n + col] = Scalar(digits[idx]);
                return true;
            }
        }
        false
    }

    fn subspace_from(&self, buf: &[Scalar]) -> Subspace {
        Subspace::from_rref_unchecked(self.n, Matrix::from_flat(self.dim, self.n, buf.to_vec()))
    }

    /// The subspace at global position `index`.
    pub fn get(&self, index: u128) -> Option<Subspace> {
        let block = self.blocks.iter().find(|b| index >= b.offset && index - b.offset < b.count)?;
        let mut buf = vec![Scalar::ZERO; self.dim * self.n];
        let mut digits = vec![0u32; block.free.len()];
        self.decode_into(block, index - block.offset, &mut buf, &mut digits);
        Some(self.subspace_from(&buf))
    }

    pub fn iter(&self) -> impl Iterator<Item = Subspace> + '_ {
        self.blocks.iter().flat_map(move |block| {
            let mut buf = vec![Scalar::ZERO; self.dim * self.n];
            let mut digits = vec![0u32; block.free.len()];
            self.decode_into(block, 0, &mut buf, &mut digits);
            let mut first = true;
            std::iter::from_fn(move || {
                if first {
                    first = false;
                    return Some(self.subspace_from(&buf));
                }
                if self.increment(block, &mut buf, &mut digits) {
                    Some(self.subspace_from(&buf))
                } else {
                    None
                }
            })
        })
    }

    fn scan_range<P>(&self, block: &PivotBlock, start: u128, end: u128, pred: &P) -> Option<u128>
    where
        P: Fn(&[Scalar]) -> bool,
    {
        let mut buf = vec![Scalar::ZERO; self.dim * self.n];
        let mut digits = vec![0u32; block.free.len()];
        self.decode_into(block, start, &mut buf, &mut digits);
        let mut pos = start;
        loop {
            if pred(&buf) {
                return Some(block.offset + pos);
            }
            pos += 1;
            if pos >= end || !self.increment(block, &mut buf, &mut digits) {
                return None;
            }
        }
    }

    /// Position and value of the first subspace (in enumeration order) whose
    /// row-major basis satisfies `pred`. The parallel scan returns the same
    /// answer as the sequential one.
    pub fn find_first<P>(&self, parallel: bool, pred: P) -> Option<(u128, Subspace)>
    where
        P: Fn(&[Scalar]) -> bool + Sync,
    {
        let hit = if parallel && self.total > CHUNK {
            let chunks: Vec<(usize, u128, u128)> = self
                .blocks
                .iter()
                .enumerate()
                .flat_map(|(bi, b)| {
                    let n_chunks = b.count.div_ceil(CHUNK);
                    (0..n_chunks).map(move |c| (bi, c * CHUNK, ((c + 1) * CHUNK).min(b.count)))
                })
                .collect();
            chunks
                .par_iter()
                .find_map_first(|&(bi, s, e)| self.scan_range(&self.blocks[bi], s, e, &pred))
        } else {
            self.blocks.iter().find_map(|b| self.scan_range(b, 0, b.count, &pred))
        };
        hit.map(|idx| (idx, self.get(idx).expect("index in range")))
    }
}

/// Every codimension-`codim` subspace of `GF(q)^n`, refusing when the count
/// exceeds `budget`.
pub fn enumerate_subspaces(gf: &Gf, n: usize, codim: usize, budget: u128) -> Result<Grassmannian, LinalgError> {
    if codim > n {
        return Err(LinalgError::Dimension(format!("codimension {codim} > {n}")));
    }
    let count = gaussian_binomial(n as u32, (n - codim) as u32, gf.order());
    let needed = count.to_u128().unwrap_or(u128::MAX);
    if needed > budget {
        return Err(LinalgError::BudgetExceeded { needed, budget });
    }
    Ok(Grassmannian::new(gf, n, codim))
}

/// JSON form of a subspace: basis rows, scalars as integers (prime fields)
/// or coefficient lists (extension fields).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubspaceJson {
    pub ambient_dim: usize,
    pub basis: Vec<Vec<serde_json::Value>>,
}

pub fn scalar_to_json(gf: &Gf, s: Scalar) -> serde_json::Value {
    if gf.is_prime_field() {
        serde_json::Value::from(s.0)
    } else {
        serde_json::Value::from(gf.coeffs(s))
    }
}

pub fn scalar_from_json(gf: &Gf, v: &serde_json::Value) -> Option<Scalar> {
    match v {
        serde_json::Value::Number(n) => {
            let x = n.as_i64()?;
            Some(gf.from_i64(x))
        }
        serde_json::Value::Array(cs) => {
            let cs: Option<Vec<u64>> = cs.iter().map(|c| c.as_u64()).collect();
            gf.from_coeffs(&cs?).ok()
        }
        _ => None,
    }
}

pub fn matrix_to_json(gf: &Gf, m: &Matrix) -> Vec<Vec<serde_json::Value>> {
    m.row_iter().map(|r| r.iter().map(|&s| scalar_to_json(gf, s)).collect()).collect()
}

pub fn matrix_from_json(gf: &Gf, cols: usize, rows: &[Vec<serde_json::Value>]) -> Option<Matrix> {
    let rows: Option<Vec<Vec<Scalar>>> = rows
        .iter()
        .map(|r| {
            if r.len() != cols {
                return None;
            }
            r.iter().map(|v| scalar_from_json(gf, v)).collect()
        })
        .collect();
    Some(Matrix::from_rows(cols, rows?))
}

impl SubspaceJson {
    pub fn from_subspace(gf: &Gf, w: &Subspace) -> Self {
        SubspaceJson { ambient_dim: w.ambient_dim(), basis: matrix_to_json(gf, w.basis()) }
    }

    /// Parses and canonicalizes (the rows need only span the subspace).
    pub fn to_subspace(&self, gf: &Gf) -> Option<Subspace> {
        let m = matrix_from_json(gf, self.ambient_dim, &self.basis)?;
        Some(Subspace::span(gf, self.ambient_dim, m.to_rows()))
    }
}

//! Linear, quadratic and cubic forms in `n` variables.
//!
//! Group action convention: for invertible `g`, `(g . f)(v) = f(g^{-1} v)`, i.e.
//! the coordinates are substituted by `g^{-1}`. This is a left action:
//! `(gh) . f = g . (h . f)`.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::field::{Gf, Scalar};
use crate::linalg::{dot, LinalgError, Matrix, Subspace};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FormError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("coordinate change matrix is singular")]
    Singular,
    #[error("limit does not exist: monomial {monomial:?} has weight {weight}")]
    NegativeWeight { monomial: [usize; 3], weight: i64 },
    #[error("invalid variable split: {0}")]
    BadSplit(String),
}

impl From<LinalgError> for FormError {
    fn from(_: LinalgError) -> Self {
        FormError::Singular
    }
}

fn check_dim(expected: usize, got: usize) -> Result<(), FormError> {
    if expected == got {
        Ok(())
    } else {
        Err(FormError::Dimension { expected, got })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LinearForm {
    pub coeffs: Vec<Scalar>,
}

impl LinearForm {
    pub fn new(coeffs: Vec<Scalar>) -> Self {
        LinearForm { coeffs }
    }

    pub fn zero(n: usize) -> Self {
        LinearForm { coeffs: vec![Scalar::ZERO; n] }
    }

    /// The coordinate function `x_i`.
    pub fn var(n: usize, i: usize) -> Self {
        let mut coeffs = vec![Scalar::ZERO; n];
        coeffs[i] = Scalar::ONE;
        LinearForm { coeffs }
    }

    pub fn n(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    pub fn evaluate(&self, gf: &Gf, v: &[Scalar]) -> Result<Scalar, FormError> {
        check_dim(self.n(), v.len())?;
        Ok(dot(gf, &self.coeffs, v))
    }

    /// `v -> l(A v)` for an `n x m` matrix `A`.
    pub fn substitute(&self, gf: &Gf, a: &Matrix) -> LinearForm {
        assert_eq!(a.rows(), self.n());
        let coeffs = (0..a.cols())
            .map(|j| {
                (0..a.rows()).fold(Scalar::ZERO, |acc, i| gf.add(acc, gf.mul(self.coeffs[i], a[(i, j)])))
            })
            .collect();
        LinearForm { coeffs }
    }
}

/// `q(v) = v^T G v` with `G` symmetric. The off-diagonal Gram entries are half
/// the corresponding monomial coefficients.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct QuadraticForm {
    gram: Matrix,
}

impl QuadraticForm {
    pub fn zero(n: usize) -> Self {
        QuadraticForm { gram: Matrix::zeros(n, n) }
    }

    pub fn from_gram(gram: Matrix) -> Result<Self, FormError> {
        check_dim(gram.rows(), gram.cols())?;
        let n = gram.rows();
        for i in 0..n {
            for j in 0..i {
                if gram[(i, j)] != gram[(j, i)] {
                    return Err(FormError::Dimension { expected: n, got: n });
                }
            }
        }
        Ok(QuadraticForm { gram })
    }

    /// From monomial coefficients `c_{ij} x_i x_j` (any index order; repeated
    /// monomials are summed).
    pub fn from_monomials(gf: &Gf, n: usize, terms: impl IntoIterator<Item = ((usize, usize), Scalar)>) -> Self {
        let half = gf.inv(gf.from_i64(2)).expect("char != 2");
        let mut gram = Matrix::zeros(n, n);
        for ((i, j), c) in terms {
            if i == j {
                gram[(i, i)] = gf.add(gram[(i, i)], c);
            } else {
                let h = gf.mul(c, half);
                gram[(i, j)] = gf.add(gram[(i, j)], h);
                gram[(j, i)] = gf.add(gram[(j, i)], h);
            }
        }
        QuadraticForm { gram }
    }

    /// Monomial coefficients `(i <= j) -> c`, zeros omitted.
    pub fn monomials(&self, gf: &Gf) -> BTreeMap<(usize, usize), Scalar> {
        let n = self.n();
        let mut out = BTreeMap::new();
        for i in 0..n {
            for j in i..n {
                let g = self.gram[(i, j)];
                let c = if i == j { g } else { gf.add(g, g) };
                if !c.is_zero() {
                    out.insert((i, j), c);
                }
            }
        }
        out
    }

    pub fn n(&self) -> usize {
        self.gram.rows()
    }

    pub fn gram(&self) -> &Matrix {
        &self.gram
    }

    pub fn is_zero(&self) -> bool {
        self.gram.is_zero()
    }

    pub fn evaluate(&self, gf: &Gf, v: &[Scalar]) -> Result<Scalar, FormError> {
        check_dim(self.n(), v.len())?;
        let gv = self.gram.mul_vec(gf, v);
        Ok(dot(gf, v, &gv))
    }

    pub fn add(&self, gf: &Gf, other: &QuadraticForm) -> QuadraticForm {
        assert_eq!(self.n(), other.n());
        let data = self.gram.data().iter().zip(other.gram.data()).map(|(&a, &b)| gf.add(a, b)).collect();
        QuadraticForm { gram: Matrix::from_flat(self.n(), self.n(), data) }
    }

    pub fn scale(&self, gf: &Gf, c: Scalar) -> QuadraticForm {
        let data = self.gram.data().iter().map(|&a| gf.mul(a, c)).collect();
        QuadraticForm { gram: Matrix::from_flat(self.n(), self.n(), data) }
    }

    /// `sum_i c_i q_i`.
    pub fn combination(gf: &Gf, n: usize, coeffs: &[Scalar], qs: &[QuadraticForm]) -> QuadraticForm {
        let mut data = vec![Scalar::ZERO; n * n];
        for (&c, q) in coeffs.iter().zip(qs) {
            if c.is_zero() {
                continue;
            }
            for (d, &g) in data.iter_mut().zip(q.gram.data()) {
                *d = gf.add(*d, gf.mul(c, g));
            }
        }
        QuadraticForm { gram: Matrix::from_flat(n, n, data) }
    }

    /// `v -> q(A v)`: Gram matrix `A^T G A`.
    pub fn substitute(&self, gf: &Gf, a: &Matrix) -> QuadraticForm {
        assert_eq!(a.rows(), self.n());
        let gram = a.transpose().mul(gf, &self.gram).mul(gf, a);
        QuadraticForm { gram }
    }

    pub fn change_of_variables(&self, gf: &Gf, g: &Matrix) -> Result<QuadraticForm, FormError> {
        check_dim(self.n(), g.rows())?;
        Ok(self.substitute(gf, &g.inverse(gf)?))
    }

    pub fn restrict(&self, gf: &Gf, w: &Subspace) -> Result<QuadraticForm, FormError> {
        check_dim(self.n(), w.ambient_dim())?;
        Ok(self.substitute(gf, &w.basis().transpose()))
    }

    /// Upper-triangular Gram entries as a flat vector, for linear-independence tests.
    pub fn flatten(&self) -> Vec<Scalar> {
        let n = self.n();
        let mut out = Vec::with_capacity(n * (n + 1) / 2);
        for i in 0..n {
            for j in i..n {
                out.push(self.gram[(i, j)]);
            }
        }
        out
    }
}

/// Sorted index triple of a degree-3 monomial.
pub type Monomial = [usize; 3];

pub fn sort3(mut m: Monomial) -> Monomial {
    m.sort_unstable();
    m
}

/// A cubic form as a map from sorted monomials to nonzero coefficients.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CubicForm {
    n: usize,
    terms: BTreeMap<Monomial, Scalar>,
}

impl CubicForm {
    pub fn zero(n: usize) -> Self {
        CubicForm { n, terms: BTreeMap::new() }
    }

    /// Sums repeated monomials and drops zeros. Indices may be unsorted.
    pub fn from_terms(gf: &Gf, n: usize, terms: impl IntoIterator<Item = (Monomial, Scalar)>) -> Self {
        let mut f = CubicForm::zero(n);
        for (m, c) in terms {
            f.add_term(gf, m, c);
        }
        f
    }

    pub fn add_term(&mut self, gf: &Gf, m: Monomial, c: Scalar) {
        let m = sort3(m);
        assert!(m[2] < self.n, "monomial index out of range");
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(m).or_insert(Scalar::ZERO);
        *entry = gf.add(*entry, c);
        if entry.is_zero() {
            self.terms.remove(&m);
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> &BTreeMap<Monomial, Scalar> {
        &self.terms
    }

    pub fn coeff(&self, m: Monomial) -> Scalar {
        self.terms.get(&sort3(m)).copied().unwrap_or(Scalar::ZERO)
    }

    pub fn add(&self, gf: &Gf, other: &CubicForm) -> CubicForm {
        assert_eq!(self.n, other.n);
        let mut out = self.clone();
        for (&m, &c) in &other.terms {
            out.add_term(gf, m, c);
        }
        out
    }

    pub fn sub(&self, gf: &Gf, other: &CubicForm) -> CubicForm {
        self.add(gf, &other.scale(gf, gf.neg(Scalar::ONE)))
    }

    pub fn scale(&self, gf: &Gf, c: Scalar) -> CubicForm {
        if c.is_zero() {
            return CubicForm::zero(self.n);
        }
        CubicForm { n: self.n, terms: self.terms.iter().map(|(&m, &v)| (m, gf.mul(v, c))).collect() }
    }

    /// Same polynomial viewed in `m >= n` variables.
    pub fn embed(&self, m: usize) -> CubicForm {
        assert!(m >= self.n);
        CubicForm { n: m, terms: self.terms.clone() }
    }

    /// Same polynomial in the first `m` variables; panics if a later variable occurs.
    pub fn truncate(&self, m: usize) -> CubicForm {
        assert!(self.terms.keys().all(|k| k[2] < m), "form uses a dropped variable");
        CubicForm { n: m, terms: self.terms.clone() }
    }

    pub fn evaluate(&self, gf: &Gf, v: &[Scalar]) -> Result<Scalar, FormError> {
        check_dim(self.n, v.len())?;
        Ok(self.terms.iter().fold(Scalar::ZERO, |acc, (m, &c)| {
            gf.add(acc, gf.mul(c, gf.mul(v[m[0]], gf.mul(v[m[1]], v[m[2]]))))
        }))
    }

    /// `v -> f(A v)` for an `n x m` matrix `A`; the result lives in `m` variables.
    pub fn substitute(&self, gf: &Gf, a: &Matrix) -> CubicForm {
        assert_eq!(a.rows(), self.n);
        let m = a.cols();
        // sparse rows of A
        let rows: Vec<Vec<(usize, Scalar)>> = (0..self.n)
            .map(|i| (0..m).filter(|&j| !a[(i, j)].is_zero()).map(|j| (j, a[(i, j)])).collect())
            .collect();
        let mut acc: BTreeMap<Monomial, Scalar> = BTreeMap::new();
        for (mono, &c) in &self.terms {
            for &(x, cx) in &rows[mono[0]] {
                let c1 = gf.mul(c, cx);
                for &(y, cy) in &rows[mono[1]] {
                    let c2 = gf.mul(c1, cy);
                    for &(z, cz) in &rows[mono[2]] {
                        let key = sort3([x, y, z]);
                        let e = acc.entry(key).or_insert(Scalar::ZERO);
                        *e = gf.add(*e, gf.mul(c2, cz));
                    }
                }
            }
        }
        acc.retain(|_, c| !c.is_zero());
        CubicForm { n: m, terms: acc }
    }

    /// `g . f`, i.e. `v -> f(g^{-1} v)`.
    pub fn change_of_variables(&self, gf: &Gf, g: &Matrix) -> Result<CubicForm, FormError> {
        check_dim(self.n, g.rows())?;
        let inv = g.inverse(gf)?;
        Ok(self.substitute(gf, &inv))
    }

    /// Pullback along the basis of `w`: a form in `dim(w)` variables.
    pub fn restrict(&self, gf: &Gf, w: &Subspace) -> Result<CubicForm, FormError> {
        check_dim(self.n, w.ambient_dim())?;
        Ok(self.substitute(gf, &w.basis().transpose()))
    }

    pub fn grade_by_weight(&self, c: &Cocharacter) -> Result<BTreeMap<i64, CubicForm>, FormError> {
        check_dim(self.n, c.weights.len())?;
        let mut out: BTreeMap<i64, CubicForm> = BTreeMap::new();
        for (&m, &v) in &self.terms {
            let w = c.monomial_weight(m);
            out.entry(w).or_insert_with(|| CubicForm::zero(self.n)).terms.insert(m, v);
        }
        Ok(out)
    }

    /// `lim_{t -> 0}` of `x_i -> t^{w_i} x_i` applied to `f`: the weight-0
    /// component, provided no component has negative weight.
    pub fn cocharacter_limit(&self, c: &Cocharacter) -> Result<CubicForm, FormError> {
        check_dim(self.n, c.weights.len())?;
        if let Some((&m, w)) = self
            .terms.keys().map(|m| (m, c.monomial_weight(*m)))
            .filter(|&(_, w)| w < 0)
            .min_by_key(|&(m, w)| (w, *m))
        {
            return Err(FormError::NegativeWeight { monomial: m, weight: w });
        }
        Ok(CubicForm {
            n: self.n,
            terms: self.terms.iter().filter(|(m, _)| c.monomial_weight(**m) == 0).map(|(&m, &v)| (m, v)).collect(),
        })
    }

    /// True iff every monomial has exactly one variable in `split.first` and
    /// two in `split.second`.
    pub fn is_separable_witness(&self, split: &Split) -> Result<bool, FormError> {
        split.validate(self.n)?;
        let in_first: Vec<bool> = (0..self.n).map(|i| split.first.contains(&i)).collect();
        Ok(self.terms.keys().all(|m| m.iter().filter(|&&i| in_first[i]).count() == 1))
    }

    /// Variables that occur in some monomial.
    pub fn support(&self) -> Vec<usize> {
        let mut vs: Vec<usize> = self.terms.keys().flat_map(|m| m.iter().copied()).collect();
        vs.sort_unstable();
        vs.dedup();
        vs
    }
}

/// One-parameter subgroup `x_i -> t^{w_i} x_i`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Cocharacter {
    pub weights: Vec<i64>,
}

impl Cocharacter {
    pub fn new(weights: Vec<i64>) -> Self {
        Cocharacter { weights }
    }

    pub fn monomial_weight(&self, m: Monomial) -> i64 {
        m.iter().map(|&i| self.weights[i]).sum()
    }

    /// Weight 1 on `killed`, 0 elsewhere: the limit sets those variables to zero.
    pub fn killing(n: usize, killed: &[usize]) -> Self {
        let mut weights = vec![0; n];
        for &k in killed {
            weights[k] = 1;
        }
        Cocharacter { weights }
    }
}

/// A partition of the variable indices into two blocks.
#[derive(Debug, Clone, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct Split {
    pub first: Vec<usize>,
    pub second: Vec<usize>,
}

impl Split {
    pub fn new(n: usize, first: Vec<usize>) -> Split {
        let second = (0..n).filter(|i| !first.contains(i)).collect();
        Split { first, second }
    }

    pub fn validate(&self, n: usize) -> Result<(), FormError> {
        let mut seen = vec![false; n];
        for &i in self.first.iter().chain(&self.second) {
            if i >= n || seen[i] {
                return Err(FormError::BadSplit(format!("index {i} repeated or out of range")));
            }
            seen[i] = true;
        }
        if seen.iter().any(|s| !s) {
            return Err(FormError::BadSplit("not every variable is covered".into()));
        }
        Ok(())
    }
}

/// `l * q` as a cubic.
pub fn product(gf: &Gf, l: &LinearForm, q: &QuadraticForm) -> CubicForm {
    let n = l.n();
    assert_eq!(n, q.n());
    let qm = q.monomials(gf);
    let mut f = CubicForm::zero(n);
    for (k, &lk) in l.coeffs.iter().enumerate() {
        if lk.is_zero() {
            continue;
        }
        for (&(i, j), &c) in &qm {
            f.add_term(gf, [i, j, k], gf.mul(lk, c));
        }
    }
    f
}

/// `f = sum_i l_i q_i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LQDecomposition {
    pub n: usize,
    pub pairs: Vec<(LinearForm, QuadraticForm)>,
}

impl LQDecomposition {
    pub fn new(n: usize) -> Self {
        LQDecomposition { n, pairs: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn quadrics(&self) -> Vec<QuadraticForm> {
        self.pairs.iter().map(|(_, q)| q.clone()).collect()
    }

    pub fn assemble(&self, gf: &Gf) -> CubicForm {
        self.pairs.iter().fold(CubicForm::zero(self.n), |acc, (l, q)| acc.add(gf, &product(gf, l, q)))
    }
}

/// Evaluation-friendly copy of a cubic for the inner loop of subspace scans.
#[derive(Debug, Clone)]
pub struct CompiledCubic {
    gf: Gf,
    n: usize,
    terms: Vec<(u32, u32, u32, Scalar)>,
    small_prime: Option<u64>,
}

impl CompiledCubic {
    pub fn new(gf: &Gf, f: &CubicForm) -> Self {
        let small_prime = (gf.is_prime_field() && gf.order() < 1 << 16).then(|| gf.order());
        CompiledCubic {
            gf: gf.clone(),
            n: f.n,
            terms: f.terms.iter().map(|(m, &c)| (m[0] as u32, m[1] as u32, m[2] as u32, c)).collect(),
            small_prime,
        }
    }

    #[inline]
    pub fn eval(&self, v: &[Scalar]) -> Scalar {
        if let Some(p) = self.small_prime {
            let mut acc = 0u64;
            for &(i, j, k, c) in &self.terms {
                let prod = c.0 as u64 * v[i as usize].0 as u64 * v[j as usize].0 as u64 % p * v[k as usize].0 as u64;
                acc += prod % p;
            }
            return Scalar((acc % p) as u32);
        }
        let gf = &self.gf;
        self.terms.iter().fold(Scalar::ZERO, |acc, &(i, j, k, c)| {
            gf.add(acc, gf.mul(c, gf.mul(v[i as usize], gf.mul(v[j as usize], v[k as usize]))))
        })
    }

    /// Whether the form vanishes identically on the row span of `basis`
    /// (`dim` rows of length `n`, row-major).
    pub fn vanishes_on(&self, basis: &[Scalar], dim: usize) -> bool {
        let n = self.n;
        if self.terms.is_empty() || dim == 0 {
            return true;
        }
        // coefficient of u_a^3 is f(b_a)
        for a in 0..dim {
            if !self.eval(&basis[a * n..(a + 1) * n]).is_zero() {
                return false;
            }
        }
        if dim == 1 {
            return true;
        }
        let gf = &self.gf;
        // full pullback, dense over sorted triples of 0..dim
        let idx = |a: usize, b: usize, c: usize| (a * dim + b) * dim + c;
        let mut acc = vec![Scalar::ZERO; dim * dim * dim];
        for &(i, j, k, c) in &self.terms {
            for a in 0..dim {
                let x = basis[a * n + i as usize];
                if x.is_zero() {
                    continue;
                }
                let cx = gf.mul(c, x);
                for b in 0..dim {
                    let y = basis[b * n + j as usize];
                    if y.is_zero() {
                        continue;
                    }
                    let cxy = gf.mul(cx, y);
                    for d in 0..dim {
                        let z = basis[d * n + k as usize];
                        if z.is_zero() {
                            continue;
                        }
                        let s = sort3([a, b, d]);
                        let slot = &mut acc[idx(s[0], s[1], s[2])];
                        *slot = gf.add(*slot, gf.mul(cxy, z));
                    }
                }
            }
        }
        acc.iter().all(|s| s.is_zero())
    }
}

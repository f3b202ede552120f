//! Linear spaces of quadratic forms: minrank / maxrank, the bounded-rank
//! combination lemma, and extraction of high-minrank subspaces.

use thiserror::Error;

use crate::field::{Gf, Scalar};
use crate::forms::{CubicForm, LQDecomposition, QuadraticForm};
use crate::linalg::Matrix;
use crate::qrank::{qrank, QrankError, SearchOptions};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum QuadError {
    #[error("enumeration budget exceeded: need {needed} candidates, budget {budget}")]
    BudgetExceeded { needed: u128, budget: u128 },
    #[error("precondition violated: {0}")]
    Precondition(String),
    /// The subspace violates `codim(Q:Q') + maxrank(Q') >= r`.
    #[error("construction failed: codim {codim} + maxrank {maxrank} < {r}")]
    ConstructionFailed { witness: QuadricSubspace, codim: usize, maxrank: usize, r: usize },
    #[error(transparent)]
    Qrank(#[from] QrankError),
}

pub fn quadratic_rank(gf: &Gf, q: &QuadraticForm) -> usize {
    q.gram().rank(gf)
}

/// A subspace of quadrics given by a linearly independent basis.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuadricSubspace {
    n: usize,
    basis: Vec<QuadraticForm>,
}

fn flat_rank(gf: &Gf, n: usize, qs: &[QuadraticForm]) -> usize {
    if qs.is_empty() {
        return 0;
    }
    Matrix::from_rows(n * (n + 1) / 2, qs.iter().map(|q| q.flatten()).collect()).rank(gf)
}

impl QuadricSubspace {
    /// Errors if the forms are dependent or live in different dimensions.
    pub fn new(gf: &Gf, n: usize, basis: Vec<QuadraticForm>) -> Result<Self, QuadError> {
        if basis.iter().any(|q| q.n() != n) {
            return Err(QuadError::Precondition("quadrics in different dimensions".into()));
        }
        if flat_rank(gf, n, &basis) != basis.len() {
            return Err(QuadError::Precondition("quadrics are linearly dependent".into()));
        }
        Ok(QuadricSubspace { n, basis })
    }

    /// Span of arbitrary forms: keeps the first independent subfamily.
    pub fn span(gf: &Gf, n: usize, forms: &[QuadraticForm]) -> Self {
        let mut basis: Vec<QuadraticForm> = Vec::new();
        for q in forms {
            assert_eq!(q.n(), n);
            basis.push(q.clone());
            if flat_rank(gf, n, &basis) < basis.len() {
                basis.pop();
            }
        }
        QuadricSubspace { n, basis }
    }

    pub fn zero(n: usize) -> Self {
        QuadricSubspace { n, basis: Vec::new() }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[QuadraticForm] {
        &self.basis
    }

    pub fn contains(&self, gf: &Gf, q: &QuadraticForm) -> bool {
        let mut all = self.basis.clone();
        all.push(q.clone());
        flat_rank(gf, self.n, &all) == self.dim()
    }

    pub fn is_subspace_of(&self, gf: &Gf, other: &QuadricSubspace) -> bool {
        self.basis.iter().all(|q| other.contains(gf, q))
    }

    pub fn combination(&self, gf: &Gf, coeffs: &[Scalar]) -> QuadraticForm {
        QuadraticForm::combination(gf, self.n, coeffs, &self.basis)
    }
}

/// Number of projective points of a `k`-dimensional space over GF(q).
fn projective_count(q: u64, k: usize) -> u128 {
    let qk = (q as u128).checked_pow(k as u32).unwrap_or(u128::MAX);
    (qk - 1) / (q as u128 - 1)
}

/// Calls `visit` with each projective point (first nonzero coefficient 1) of
/// `GF(q)^k` in a fixed order: leading position ascending, then the tail as a
/// base-q counter.
fn for_each_projective(gf: &Gf, k: usize, mut visit: impl FnMut(&[Scalar]) -> bool) {
    let q = gf.order() as u32;
    let mut v = vec![Scalar::ZERO; k];
    for lead in 0..k {
        v.iter_mut().for_each(|x| *x = Scalar::ZERO);
        v[lead] = Scalar::ONE;
        loop {
            if !visit(&v) {
                return;
            }
            // increment the tail, last entry fastest
            let mut pos = k;
            let mut wrapped = true;
            while pos > lead + 1 {
                pos -= 1;
                v[pos].0 += 1;
                if v[pos].0 < q {
                    wrapped = false;
                    break;
                }
                v[pos] = Scalar::ZERO;
            }
            if wrapped {
                break;
            }
        }
    }
}

fn check_budget(gf: &Gf, k: usize, budget: u128) -> Result<(), QuadError> {
    let needed = projective_count(gf.order(), k);
    if needed > budget {
        return Err(QuadError::BudgetExceeded { needed, budget });
    }
    Ok(())
}

/// `(minrank, maxrank)` by enumeration of the projective points of `Q`;
/// `(0, 0)` for the zero space.
pub fn minmax_rank(gf: &Gf, qs: &QuadricSubspace, budget: u128) -> Result<(usize, usize), QuadError> {
    if qs.dim() == 0 {
        return Ok((0, 0));
    }
    check_budget(gf, qs.dim(), budget)?;
    let (mut lo, mut hi) = (usize::MAX, 0);
    for_each_projective(gf, qs.dim(), |c| {
        let r = quadratic_rank(gf, &qs.combination(gf, c));
        lo = lo.min(r);
        hi = hi.max(r);
        true
    });
    Ok((lo, hi))
}

/// Lemma: if every `q_i` has rank `< s` and some combination has rank `>= t`,
/// the first combination of rank `>= t` in order of support size has rank
/// `<= t + s - 2`. Combinations are ordered by support size, then support
/// (lexicographically), then coefficients (first coefficient 1, the rest
/// nonzero, as a counter). Returns the form and its coefficients.
pub fn bounded_rank_combination(
    gf: &Gf,
    qs: &[QuadraticForm],
    t: usize,
    s: usize,
    budget: u128,
) -> Result<(QuadraticForm, Vec<Scalar>), QuadError> {
    if t == 0 || s == 0 {
        return Err(QuadError::Precondition("t and s must be positive".into()));
    }
    let n = match qs.first() {
        Some(q) => q.n(),
        None => return Err(QuadError::Precondition("no combination has rank >= t".into())),
    };
    if let Some(i) = qs.iter().position(|q| quadratic_rank(gf, q) >= s) {
        return Err(QuadError::Precondition(format!("q_{} has rank >= s = {s}", i + 1)));
    }
    let q = gf.order();
    let mut spent: u128 = 0;
    for k in 1..=qs.len() {
        for support in itertools::Itertools::combinations(0..qs.len(), k) {
            // (q-1)^(k-1) coefficient tuples
            let tuples = ((q - 1) as u128).checked_pow(k as u32 - 1).unwrap_or(u128::MAX);
            spent = spent.saturating_add(tuples);
            if spent > budget {
                return Err(QuadError::BudgetExceeded { needed: spent, budget });
            }
            let mut tail = vec![1u32; k - 1];
            loop {
                let mut coeffs = vec![Scalar::ZERO; qs.len()];
                coeffs[support[0]] = Scalar::ONE;
                for (j, &c) in tail.iter().enumerate() {
                    coeffs[support[j + 1]] = Scalar(c);
                }
                let comb = QuadraticForm::combination(gf, n, &coeffs, qs);
                let r = quadratic_rank(gf, &comb);
                if r >= t {
                    assert!(r + 2 <= t + s, "rank {r} exceeds t + s - 2 = {}", t + s - 2);
                    return Ok((comb, coeffs));
                }
                // counter over nonzero residues (extension elements are
                // indices 1..q-1, all nonzero)
                let mut pos = tail.len();
                let mut done = true;
                while pos > 0 {
                    pos -= 1;
                    tail[pos] += 1;
                    if (tail[pos] as u64) < q {
                        done = false;
                        break;
                    }
                    tail[pos] = 1;
                }
                if done {
                    break;
                }
            }
        }
    }
    Err(QuadError::Precondition(format!("no combination has rank >= {t}")))
}

/// A basis with lexicographically minimal rank profile: repeatedly take the
/// first element (by rank, then enumeration order) outside the current span.
pub fn lex_minimal_rank_basis(gf: &Gf, qs: &QuadricSubspace, budget: u128) -> Result<Vec<QuadraticForm>, QuadError> {
    if qs.dim() == 0 {
        return Ok(Vec::new());
    }
    check_budget(gf, qs.dim(), budget)?;
    let mut cands: Vec<(usize, Vec<Scalar>)> = Vec::new();
    for_each_projective(gf, qs.dim(), |c| {
        cands.push((quadratic_rank(gf, &qs.combination(gf, c)), c.to_vec()));
        true
    });
    // stable: ties keep enumeration order
    cands.sort_by_key(|(r, _)| *r);
    let mut chosen: Vec<Vec<Scalar>> = Vec::new();
    for (_, c) in cands {
        chosen.push(c);
        if Matrix::from_rows(qs.dim(), chosen.clone()).rank(gf) < chosen.len() {
            chosen.pop();
        }
        if chosen.len() == qs.dim() {
            break;
        }
    }
    Ok(chosen.iter().map(|c| qs.combination(gf, c)).collect())
}

/// `m_i = (2^i - 1)(s - 1) + 1`.
fn m_seq(i: usize, s: usize) -> usize {
    ((1usize << i) - 1) * (s - 1) + 1
}

/// Outcome of [`extract_high_minrank`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Extraction {
    pub subspace: QuadricSubspace,
    pub minrank: usize,
    /// True when the top of the lex-minimal basis already sufficed.
    pub top_span: bool,
}

/// A `k`-dimensional `Q' ⊆ Q` with `minrank(Q') >= s`, assuming
/// `codim(Q:Q') + maxrank(Q') >= r` for all `Q'`; a failure exhibits a
/// subspace violating that assumption.
pub fn extract_high_minrank(
    gf: &Gf,
    qs: &QuadricSubspace,
    k: usize,
    s: usize,
    r: usize,
    budget: u128,
) -> Result<Extraction, QuadError> {
    if k == 0 || s == 0 || r == 0 {
        return Err(QuadError::Precondition("k, s, r must be positive".into()));
    }
    if k >= usize::BITS as usize - 1 || ((1usize << k) - 1).saturating_mul(s - 1).saturating_add(k) > r {
        return Err(QuadError::Precondition(format!("(2^{k}-1)({s}-1)+{k} > {r}")));
    }
    let n = qs.dim();
    let fail = |witness: QuadricSubspace| -> Result<Extraction, QuadError> {
        let (_, maxrank) = minmax_rank(gf, &witness, budget)?;
        let codim = n - witness.dim();
        debug_assert!(codim + maxrank < r);
        Err(QuadError::ConstructionFailed { witness, codim, maxrank, r })
    };
    let lex = lex_minimal_rank_basis(gf, qs, budget)?;
    let ranks: Vec<usize> = lex.iter().map(|q| quadratic_rank(gf, q)).collect();
    // the top-k span needs no hypothesis; its postcondition is checked below
    let top_span = n >= k && ranks[n - k] >= s;
    if !top_span && n < r {
        // Q' = 0 already violates the hypothesis
        return fail(QuadricSubspace::zero(qs.n()));
    }
    let out = if top_span {
        QuadricSubspace { n: qs.n(), basis: lex[n - k..].to_vec() }
    } else {
        let mut ps: Vec<QuadraticForm> = Vec::new();
        for l in 1..=k {
            let ml = m_seq(l, s);
            let lhs: usize = (1..l).map(|i| m_seq(i, s) + s - 2).sum();
            assert_eq!(lhs + s, ml, "weight count for step {l}");
            let c = n - r + ml;
            let cands = &lex[..c];
            match bounded_rank_combination(gf, cands, ml, s, budget) {
                Ok((p, _)) => ps.push(p),
                Err(QuadError::Precondition(_)) => {
                    return fail(QuadricSubspace { n: qs.n(), basis: cands.to_vec() });
                }
                Err(e) => return Err(e),
            }
        }
        QuadricSubspace::new(gf, qs.n(), ps)?
    };
    let (minrank, _) = minmax_rank(gf, &out, budget)?;
    assert!(out.dim() == k && minrank >= s, "extraction postcondition");
    debug_assert!(out.is_subspace_of(gf, qs));
    Ok(Extraction { subspace: out, minrank, top_span })
}

/// `codim(Q:Q') + maxrank(Q') >= qrank(f)` where `Q` is the span of the
/// decomposition's quadrics. Always true by theorem.
pub fn verify_maxrank_inequality(
    gf: &Gf,
    f: &CubicForm,
    d: &LQDecomposition,
    q_prime: &QuadricSubspace,
    opts: SearchOptions,
) -> Result<bool, QuadError> {
    if &d.assemble(gf) != f {
        return Err(QuadError::Precondition("decomposition does not assemble to f".into()));
    }
    let q = QuadricSubspace::span(gf, d.n, &d.quadrics());
    if !q_prime.is_subspace_of(gf, &q) {
        return Err(QuadError::Precondition("Q' is not contained in Q".into()));
    }
    let (_, maxrank) = minmax_rank(gf, q_prime, opts.budget)?;
    let r = qrank(gf, f, opts)?.r;
    Ok(q.dim() - q_prime.dim() + maxrank >= r)
}

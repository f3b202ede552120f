//! The q-rank of a cubic: the least `r` with `f = sum_{i<r} l_i q_i`.
//!
//! Equivalently, the least codimension of a subspace on which `f` vanishes.
//! Everything here is over the working field GF(q), not its closure.

use std::cmp::Ordering;

use num_bigint::BigUint;
use num_integer::Roots;
use num_traits::{One, ToPrimitive, Zero};
use thiserror::Error;

use crate::field::{Gf, Scalar};
use crate::forms::{CompiledCubic, CubicForm, FormError, LQDecomposition, LinearForm, QuadraticForm};
use crate::linalg::{complete_basis, gaussian_binomial, LinalgError, Matrix, Subspace, DEFAULT_BUDGET, Grassmannian};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum QrankError {
    #[error("enumeration budget exceeded at codimension {codim}: need {needed} candidates, budget {budget}")]
    BudgetExceeded { codim: usize, needed: u128, budget: u128 },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error(transparent)]
    Form(#[from] FormError),
}

impl From<LinalgError> for QrankError {
    fn from(e: LinalgError) -> Self {
        QrankError::Precondition(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchOptions {
    /// Cap on the total number of candidates examined.
    pub budget: u128,
    /// Scan enumeration chunks on the rayon pool.
    pub parallel: bool,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions { budget: DEFAULT_BUDGET, parallel: true }
    }
}

impl SearchOptions {
    pub fn sequential() -> Self {
        SearchOptions { parallel: false, ..Default::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleResult {
    pub r: usize,
    /// First codim-`r` subspace in enumeration order on which `f` vanishes.
    pub witness: Subspace,
    pub enumeration_count: u128,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Qrank {
    Exact(OracleResult),
    /// The cap was reached: no vanishing subspace of codimension `< lower_bound`.
    AtLeast { lower_bound: usize, enumeration_count: u128 },
}

impl Qrank {
    pub fn exact(self) -> Option<OracleResult> {
        match self {
            Qrank::Exact(r) => Some(r),
            Qrank::AtLeast { .. } => None,
        }
    }
}

fn count_or_max(n: usize, k: usize, q: u64) -> u128 {
    gaussian_binomial(n as u32, k as u32, q).to_u128().unwrap_or(u128::MAX)
}

/// Vanishing-subspace oracle: scans codimension 0, 1, 2, ... in the fixed
/// Grassmannian order and returns the first hit.
pub fn qrank_oracle(gf: &Gf, f: &CubicForm, opts: SearchOptions, max_r: Option<usize>) -> Result<Qrank, QrankError> {
    let n = f.n();
    let compiled = CompiledCubic::new(gf, f);
    let mut spent: u128 = 0;
    let top = max_r.map_or(n, |m| m.min(n));
    for codim in 0..=top {
        let dim = n - codim;
        let count = count_or_max(n, dim, gf.order());
        let needed = spent.saturating_add(count);
        if needed > opts.budget {
            return Err(QrankError::BudgetExceeded { codim, needed, budget: opts.budget });
        }
        let grass = Grassmannian::new(gf, n, codim);
        if let Some((idx, w)) = grass.find_first(opts.parallel, |basis| compiled.vanishes_on(basis, dim)) {
            return Ok(Qrank::Exact(OracleResult { r: codim, witness: w, enumeration_count: spent + idx + 1 }));
        }
        spent = needed;
    }
    // only reachable with a cap below n: codim n (the zero subspace) always works
    Ok(Qrank::AtLeast { lower_bound: top + 1, enumeration_count: spent })
}

/// Exact q-rank via [`qrank_oracle`] without a cap.
pub fn qrank(gf: &Gf, f: &CubicForm, opts: SearchOptions) -> Result<OracleResult, QrankError> {
    Ok(qrank_oracle(gf, f, opts, None)?.exact().expect("uncapped search is exact"))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LinearSolveResult {
    Exact { r: usize, decomposition: LQDecomposition, enumeration_count: u128 },
    AtLeast { lower_bound: usize, enumeration_count: u128 },
}

/// Representatives of the projective points of `GF(q)^n`: first nonzero entry 1.
fn projective_points(gf: &Gf, n: usize) -> Vec<Vec<Scalar>> {
    let q = gf.order() as u32;
    let mut out = Vec::new();
    for lead in 0..n {
        let free = n - lead - 1;
        let total = (q as u64).pow(free as u32);
        for mut c in 0..total {
            let mut v = vec![Scalar::ZERO; n];
            v[lead] = Scalar::ONE;
            for slot in v[lead + 1..].iter_mut().rev() {
                *slot = Scalar((c % q as u64) as u32);
                c /= q as u64;
            }
            out.push(v);
        }
    }
    out
}

/// Quadric monomials `(a <= b)` in a fixed order.
fn quadric_monomials(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|a| (a..n).map(move |b| (a, b))).collect()
}

/// Index of the sorted triple among all cubic monomials in `n` variables.
fn cubic_monomials(n: usize) -> Vec<[usize; 3]> {
    let mut out = Vec::new();
    for a in 0..n {
        for b in a..n {
            for c in b..n {
                out.push([a, b, c]);
            }
        }
    }
    out
}

/// Solve `sum l_i q_i = f` for the quadrics; `None` if inconsistent.
fn solve_for_quadrics(gf: &Gf, f: &CubicForm, ls: &[&Vec<Scalar>]) -> Option<Vec<QuadraticForm>> {
    let n = f.n();
    let qm = quadric_monomials(n);
    let cm = cubic_monomials(n);
    let row_of = |m: [usize; 3]| cm.binary_search(&m).expect("monomial listed");
    let unknowns = ls.len() * qm.len();
    let mut aug = Matrix::zeros(cm.len(), unknowns + 1);
    for (i, l) in ls.iter().enumerate() {
        for (u, &(a, b)) in qm.iter().enumerate() {
            for (k, &c) in l.iter().enumerate() {
                if c.is_zero() {
                    continue;
                }
                let mut m = [a, b, k];
                m.sort_unstable();
                let row = row_of(m);
                let col = i * qm.len() + u;
                aug[(row, col)] = gf.add(aug[(row, col)], c);
            }
        }
    }
    for (&m, &c) in f.terms() {
        aug[(row_of(m), unknowns)] = c;
    }
    let pivots = aug.rref_in_place(gf);
    if pivots.last() == Some(&unknowns) {
        return None;
    }
    let mut sol = vec![Scalar::ZERO; unknowns];
    for (row, &p) in pivots.iter().enumerate() {
        sol[p] = aug[(row, unknowns)];
    }
    Some(
        (0..ls.len())
            .map(|i| {
                QuadraticForm::from_monomials(gf, n, qm.iter().enumerate().map(|(u, &ab)| (ab, sol[i * qm.len() + u])))
            })
            .collect(),
    )
}

/// Decomposition oracle, independent of the subspace enumeration: for
/// r = 0, 1, ... try every set of `r` linearly independent linear forms (up
/// to scalars) and decide by linear algebra whether quadrics completing
/// `sum l_i q_i = f` exist.
pub fn qrank_linear_solve_oracle(
    gf: &Gf,
    f: &CubicForm,
    budget: u128,
    max_r: Option<usize>,
) -> Result<LinearSolveResult, QrankError> {
    let n = f.n();
    if f.is_zero() {
        return Ok(LinearSolveResult::Exact { r: 0, decomposition: LQDecomposition::new(n), enumeration_count: 1 });
    }
    let points = projective_points(gf, n);
    let top = max_r.map_or(n, |m| m.min(n));
    let mut spent: u128 = 1;
    for r in 1..=top {
        let count = binomial_u128(points.len() as u128, r as u128);
        let needed = spent.saturating_add(count);
        if needed > budget {
            return Err(QrankError::BudgetExceeded { codim: r, needed, budget });
        }
        for (j, combo) in itertools::Itertools::combinations(points.iter(), r).enumerate() {
            let m = Matrix::from_rows(n, combo.iter().map(|v| (*v).clone()).collect());
            if m.rank(gf) < r {
                continue;
            }
            if let Some(qs) = solve_for_quadrics(gf, f, &combo) {
                let pairs = combo.iter().map(|l| LinearForm::new((*l).clone())).zip(qs).collect();
                return Ok(LinearSolveResult::Exact {
                    r,
                    decomposition: LQDecomposition { n, pairs },
                    enumeration_count: spent + j as u128 + 1,
                });
            }
        }
        spent = needed;
    }
    Ok(LinearSolveResult::AtLeast { lower_bound: top + 1, enumeration_count: spent })
}

fn binomial_u128(n: u128, k: u128) -> u128 {
    if k > n {
        return 0;
    }
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = match acc.checked_mul(n - i) {
            Some(v) => v / (i + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// The decomposition from a vanishing subspace: choose coordinates whose first
/// `codim(W)` members cut out `W`, then collect each monomial under the first
/// of those coordinates it contains.
pub fn decompose_via_subspace(gf: &Gf, f: &CubicForm, w: &Subspace) -> Result<LQDecomposition, QrankError> {
    let n = f.n();
    if w.ambient_dim() != n {
        return Err(FormError::Dimension { expected: n, got: w.ambient_dim() }.into());
    }
    if !f.restrict(gf, w)?.is_zero() {
        return Err(QrankError::Precondition("f does not vanish on the subspace".into()));
    }
    let r = w.codim();
    // v = M^T y, so y = M^{-T} v
    let m = complete_basis(w);
    let mt = m.transpose();
    let back = mt.inverse(gf)?;
    let g = f.substitute(gf, &mt);
    let mut quads: Vec<Vec<((usize, usize), Scalar)>> = vec![Vec::new(); r];
    for (&mono, &c) in g.terms() {
        let i = mono[0];
        if i >= r {
            return Err(QrankError::Precondition("monomial avoids the cut-out coordinates".into()));
        }
        quads[i].push(((mono[1], mono[2]), c));
    }
    let pairs = quads
        .into_iter()
        .enumerate()
        .map(|(i, terms)| {
            let l = LinearForm::new(back.row(i).to_vec());
            let q = QuadraticForm::from_monomials(gf, n, terms).substitute(gf, &back);
            (l, q)
        })
        .collect();
    Ok(LQDecomposition { n, pairs })
}

/// `floor((sqrt(8d + 17) - 3) / 2)` with an exact integer square root.
pub fn xi(d: u64) -> u64 {
    let s = (8 * d as u128 + 17).sqrt();
    ((s - 3) / 2) as u64
}

/// `C(k+1, 2) + k - 1`, the dimension needed for a `k`-dimensional linear
/// subspace on a cubic hypersurface.
fn xi_threshold(k: u128) -> u128 {
    k * (k + 1) / 2 + k - 1
}

/// The largest `k >= 0` with `C(k+1,2) + k - 1 <= d`, found by search.
pub fn xi_combinatorial(d: u64) -> u64 {
    let d = d as u128;
    // xi_threshold(0) underflows to -1 <= d, so k = 0 always qualifies
    let fits = |k: u128| k == 0 || xi_threshold(k) <= d;
    let mut hi: u128 = 1;
    while fits(hi) {
        hi *= 2;
    }
    let mut lo = hi / 2; // fits(lo), !fits(hi)
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if fits(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo as u64
}

/// Left side of the surjection inequality:
/// `(2^d - 1)(d^2 2^d + 2(d+1)d - 1) + d`.
pub fn surjection_lhs(d: u32) -> BigUint {
    let two_d = BigUint::one() << d;
    let dd = BigUint::from(d);
    let inner = &dd * &dd * &two_d + BigUint::from(2u32) * (&dd + 1u32) * &dd - 1u32;
    (two_d - 1u32) * inner + dd
}

/// Least `r` with `surjection_lhs(d) <= xi(r) / 2`, i.e. `xi(r) >= 2D`, i.e.
/// `r >= C(2D+1, 2) + 2D - 1`.
pub fn surjection_min_qrank(d: u32) -> BigUint {
    let a = surjection_lhs(d) * 2u32;
    &a * (&a + 1u32) / 2u32 + a - 1u32
}

/// `ln 2` brackets: 0.693147 < ln 2 < 0.693148.
const LN2_LO: (u64, u64) = (693_147, 1_000_000);
const LN2_HI: (u64, u64) = (693_148, 1_000_000);

/// `floor(e^n)`, exactly.
pub fn exp_floor(n: u32) -> BigUint {
    if n == 0 {
        return BigUint::one();
    }
    let mut prec: u64 = 64;
    loop {
        // fixed point with `prec` fractional bits; each term is floored, so the
        // sum undershoots by < (terms) units, and the tail once terms halve is
        // below twice the last term
        let scale = BigUint::one() << prec;
        let mut term = scale.clone();
        let mut sum = BigUint::zero();
        let mut k: u64 = 0;
        let mut err = BigUint::zero();
        loop {
            sum += &term;
            err += 1u32;
            k += 1;
            term = term * n / k;
            if k > 2 * n as u64 && term.is_zero() {
                break;
            }
        }
        // tail after the loop: remaining exact terms < 1 unit each, geometric
        err += 2u32;
        let lo = &sum >> prec;
        let hi = (&sum + &err) >> prec;
        if lo == hi {
            return lo;
        }
        prec *= 2;
    }
}

/// Whether `r >= e^n` (equivalently `r > e^n` for `n >= 1`).
fn ge_exp(r: &BigUint, n: u32) -> bool {
    if r.is_zero() {
        return false;
    }
    let bits = r.bits(); // 2^(bits-1) <= r < 2^bits
    // ln r < bits ln 2 < bits * LN2_HI
    if (bits as u128) * LN2_HI.0 as u128 <= n as u128 * LN2_HI.1 as u128 {
        return false;
    }
    // ln r >= (bits-1) ln 2 > (bits-1) * LN2_LO
    if (bits as u128 - 1) * LN2_LO.0 as u128 >= n as u128 * LN2_LO.1 as u128 {
        return true;
    }
    match r.cmp(&exp_floor(n)) {
        Ordering::Greater => true,
        // e^n is irrational for n >= 1, so r = floor(e^n) < e^n
        Ordering::Equal => n == 0,
        Ordering::Less => false,
    }
}

/// Smallest integer strictly above `e^240`.
pub fn mainthm3_threshold() -> BigUint {
    exp_floor(240) + 1u32
}

/// Whether `r > e^240` and `d <= ln(r) / 3`.
pub fn mainthm3_check(r: &BigUint, d: u32) -> bool {
    ge_exp(r, 240) && ge_exp(r, 3 * d)
}

/// Q-ranks of `f` restricted to each member of a nested chain of subspaces.
/// Errors if the chain is not nested; the returned sequence is checked to be
/// non-decreasing.
pub fn qrank_along_chain(
    gf: &Gf,
    f: &CubicForm,
    chain: &[Subspace],
    opts: SearchOptions,
) -> Result<Vec<usize>, QrankError> {
    for pair in chain.windows(2) {
        if !pair[0].is_subspace_of(gf, &pair[1]) {
            return Err(QrankError::Precondition("chain is not nested".into()));
        }
    }
    let mut out = Vec::with_capacity(chain.len());
    for w in chain {
        out.push(qrank(gf, &f.restrict(gf, w)?, opts)?.r);
    }
    Ok(out)
}

//! The diagonal cubic `sum x_i y_i z_i` and the three-phase basis selection
//! showing it survives restriction to any subspace of codimension `n - 1`.

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::field::{FieldSpec, Gf, Scalar};
use crate::forms::{product, CubicForm, LinearForm, QuadraticForm};
use crate::linalg::{matrix_to_json, scalar_to_json, Matrix, Subspace};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WitnessError {
    #[error("the {count} forms span only {rank} of {m} dimensions")]
    NotSpanning { count: usize, rank: usize, m: usize },
    #[error("expected codimension {expected}, got {got}")]
    Codimension { expected: usize, got: usize },
    #[error("malformed input: {0}")]
    Malformed(String),
}

/// `sum_i x_i y_i z_i` in `3n` variables ordered `x1 y1 z1 x2 y2 z2 ...`.
pub fn diagonal_cubic(gf: &Gf, n: usize) -> CubicForm {
    CubicForm::from_terms(gf, 3 * n, (0..n).map(|i| ([3 * i, 3 * i + 1, 3 * i + 2], Scalar::ONE)))
}

/// Variable names matching [`diagonal_cubic`].
pub fn diagonal_var_names(n: usize) -> Vec<String> {
    (1..=n).flat_map(|i| [format!("x{i}"), format!("y{i}"), format!("z{i}")]).collect()
}

/// An `n x 3` array of linear forms on an `m`-dimensional space, standing for
/// `sum_i row_i[0] * row_i[1] * row_i[2]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TripleMatrix {
    pub m: usize,
    pub rows: Vec<[Vec<Scalar>; 3]>,
}

impl TripleMatrix {
    pub fn new(m: usize, rows: Vec<[Vec<Scalar>; 3]>) -> Result<Self, WitnessError> {
        if rows.iter().flatten().any(|v| v.len() != m) {
            return Err(WitnessError::Malformed(format!("every form needs {m} coefficients")));
        }
        Ok(TripleMatrix { m, rows })
    }

    /// Coordinate functionals of `3n`-space restricted to `w`, expressed in
    /// `w`'s basis: the form for coordinate `j` is column `j` of the basis.
    pub fn from_subspace(n: usize, w: &Subspace) -> Self {
        assert_eq!(w.ambient_dim(), 3 * n);
        let b = w.basis();
        let col = |j: usize| (0..b.rows()).map(|a| b[(a, j)]).collect::<Vec<_>>();
        TripleMatrix { m: w.dim(), rows: (0..n).map(|i| [col(3 * i), col(3 * i + 1), col(3 * i + 2)]).collect() }
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    /// The cubic `sum_i x_i y_i z_i` on the `m`-space.
    pub fn cubic(&self, gf: &Gf) -> CubicForm {
        let mut f = CubicForm::zero(self.m);
        for [x, y, z] in &self.rows {
            let yz = QuadraticForm::from_monomials(
                gf,
                self.m,
                y.iter().enumerate().flat_map(|(a, &ya)| {
                    z.iter().enumerate().map(move |(b, &zb)| ((a, b), gf.mul(ya, zb)))
                }),
            );
            f = f.add(gf, &product(gf, &LinearForm::new(x.clone()), &yz));
        }
        f
    }

    fn apply(&mut self, op: &Move) {
        match *op {
            Move::SwapRows { i, j } => self.rows.swap(i, j),
            Move::SwapWithin { row, a, b } => self.rows[row].swap(a, b),
        }
    }
}

/// A value-preserving rearrangement of the triple matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Move {
    SwapRows { i: usize, j: usize },
    SwapWithin { row: usize, a: usize, b: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhaseCertificate {
    pub trace: Vec<Move>,
    pub r: usize,
    pub s: usize,
    pub t: usize,
    /// `X_1..X_r, Y_1..Y_s, Z_1..Z_t` as coefficient vectors.
    pub basis: Vec<Vec<Scalar>>,
    /// Coefficient of `X_1 Y_1 Z_1` in the cubic written in the new basis;
    /// `None` when `t = 0`.
    pub pivot_coefficient: Option<Scalar>,
}

/// Incremental span membership over GF(q) (kept in reduced echelon form).
struct SpanTracker<'a> {
    gf: &'a Gf,
    rows: Vec<(usize, Vec<Scalar>)>,
}

impl<'a> SpanTracker<'a> {
    fn new(gf: &'a Gf) -> Self {
        SpanTracker { gf, rows: Vec::new() }
    }

    fn reduce(&self, v: &[Scalar]) -> Vec<Scalar> {
        let gf = self.gf;
        let mut v = v.to_vec();
        for (p, row) in &self.rows {
            let c = v[*p];
            if !c.is_zero() {
                for (x, &r) in v.iter_mut().zip(row) {
                    *x = gf.sub(*x, gf.mul(c, r));
                }
            }
        }
        v
    }

    fn contains(&self, v: &[Scalar]) -> bool {
        self.reduce(v).iter().all(|x| x.is_zero())
    }

    /// Adds `v`; returns false if it was already in the span.
    fn insert(&mut self, v: &[Scalar]) -> bool {
        let gf = self.gf;
        let mut red = self.reduce(v);
        let Some(p) = red.iter().position(|x| !x.is_zero()) else { return false };
        let inv = gf.inv(red[p]).expect("nonzero");
        red.iter_mut().for_each(|x| *x = gf.mul(*x, inv));
        for (_, row) in self.rows.iter_mut() {
            let c = row[p];
            if !c.is_zero() {
                for (x, &r) in row.iter_mut().zip(&red) {
                    *x = gf.sub(*x, gf.mul(c, r));
                }
            }
        }
        self.rows.push((p, red));
        true
    }
}

/// One phase: for slots `p = 0, 1, ...` look in rows `p..limit` at the given
/// columns (lowest row first, then column order) for an entry outside the
/// span, and move it to `(p, target)`.
fn run_phase(
    tm: &mut TripleMatrix,
    span: &mut SpanTracker,
    trace: &mut Vec<Move>,
    limit: usize,
    cols: &[usize],
    target: usize,
) -> usize {
    let mut p = 0;
    while p < limit {
        let hit = (p..limit).flat_map(|i| cols.iter().map(move |&c| (i, c))).find(|&(i, c)| !span.contains(&tm.rows[i][c]));
        let Some((i, c)) = hit else { break };
        for mv in [
            (i != p).then_some(Move::SwapRows { i: p, j: i }),
            (c != target).then_some(Move::SwapWithin { row: p, a: target, b: c }),
        ]
        .into_iter()
        .flatten()
        {
            tm.apply(&mv);
            trace.push(mv);
        }
        span.insert(&tm.rows[p][target].clone());
        p += 1;
    }
    p
}

/// Coefficient of `X_1 Y_1 Z_1` after rewriting `tm`'s cubic in `basis`.
fn pivot_coefficient(gf: &Gf, tm: &TripleMatrix, basis: &[Vec<Scalar>], r: usize, s: usize, t: usize) -> Option<Scalar> {
    if t == 0 || s == 0 || r == 0 {
        return None;
    }
    let m = tm.m;
    // entry = c . B  =>  c = entry . B^{-1}
    let b_inv = Matrix::from_rows(m, basis.to_vec()).inverse(gf).expect("basis");
    let to_new = |v: &[Scalar]| -> Vec<Scalar> {
        (0..m).map(|j| (0..m).fold(Scalar::ZERO, |acc, k| gf.add(acc, gf.mul(v[k], b_inv[(k, j)])))).collect()
    };
    let rewritten = TripleMatrix {
        m,
        rows: tm.rows.iter().map(|[x, y, z]| [to_new(x), to_new(y), to_new(z)]).collect(),
    };
    Some(rewritten.cubic(gf).coeff([0, r, r + s]))
}

/// The three-phase procedure. Deterministic: lowest row first, then columns
/// in `x, y, z` order.
pub fn three_phase_basis(gf: &Gf, input: &TripleMatrix) -> Result<PhaseCertificate, WitnessError> {
    let mut tm = input.clone();
    let n = tm.n();
    let m = tm.m;
    let mut trace = Vec::new();
    let mut span = SpanTracker::new(gf);

    let r = run_phase(&mut tm, &mut span, &mut trace, n, &[0, 1, 2], 0);
    assert!(tm.rows[r..].iter().flatten().all(|v| span.contains(v)), "phase 1 bookkeeping");

    let s = run_phase(&mut tm, &mut span, &mut trace, r, &[1, 2], 1);
    assert!(tm.rows[s..r].iter().all(|row| span.contains(&row[1]) && span.contains(&row[2])), "phase 2 bookkeeping");
    assert!(tm.rows[r..].iter().flatten().all(|v| span.contains(v)), "phase 1 bookkeeping after phase 2");

    let t = run_phase(&mut tm, &mut span, &mut trace, s, &[2], 2);
    assert!(tm.rows[t..s].iter().all(|row| span.contains(&row[2])), "phase 3 bookkeeping");

    if r + s + t != m {
        return Err(WitnessError::NotSpanning { count: 3 * n, rank: r + s + t, m });
    }
    let basis: Vec<Vec<Scalar>> = (0..r)
        .map(|i| tm.rows[i][0].clone())
        .chain((0..s).map(|i| tm.rows[i][1].clone()))
        .chain((0..t).map(|i| tm.rows[i][2].clone()))
        .collect();
    let pivot = pivot_coefficient(gf, &tm, &basis, r, s, t);
    Ok(PhaseCertificate { trace, r, s, t, basis, pivot_coefficient: pivot })
}

/// Independent check of a phase certificate against its input: replay the
/// moves, confirm the cubic is unchanged, the basis sits at the claimed
/// positions and is a basis, `r >= s >= t`, and recompute the coefficient.
pub fn verify_phase_certificate(gf: &Gf, input: &TripleMatrix, cert: &PhaseCertificate) -> Result<(), String> {
    let n = input.n();
    let mut tm = input.clone();
    for mv in &cert.trace {
        let ok = match *mv {
            Move::SwapRows { i, j } => i < n && j < n,
            Move::SwapWithin { row, a, b } => row < n && a < 3 && b < 3,
        };
        if !ok {
            return Err(format!("move {mv:?} out of range"));
        }
        tm.apply(mv);
    }
    if tm.cubic(gf) != input.cubic(gf) {
        return Err("moves changed the cubic".into());
    }
    let (r, s, t) = (cert.r, cert.s, cert.t);
    if !(r >= s && s >= t && r <= n) || r + s + t != input.m || cert.basis.len() != input.m {
        return Err("phase lengths inconsistent".into());
    }
    let at: Vec<Vec<Scalar>> = (0..r)
        .map(|i| tm.rows[i][0].clone())
        .chain((0..s).map(|i| tm.rows[i][1].clone()))
        .chain((0..t).map(|i| tm.rows[i][2].clone()))
        .collect();
    if at != cert.basis {
        return Err("basis does not match the rearranged matrix".into());
    }
    if Matrix::from_rows(input.m, at).rank(gf) != input.m {
        return Err("selected forms are not a basis".into());
    }
    if pivot_coefficient(gf, &tm, &cert.basis, r, s, t) != cert.pivot_coefficient {
        return Err("pivot coefficient does not match".into());
    }
    if t >= 1 && cert.pivot_coefficient != Some(Scalar::ONE) {
        return Err("pivot coefficient is not 1".into());
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiagonalCertificate {
    pub n: usize,
    pub subspace: Subspace,
    pub phase: PhaseCertificate,
}

impl DiagonalCertificate {
    /// `f|_W != 0`, read off the certificate.
    pub fn nonvanishing(&self) -> bool {
        self.phase.pivot_coefficient.is_some_and(|c| !c.is_zero())
    }
}

/// Certifies `diagonal_cubic(n)|_W != 0` for `codim(W) = n - 1`, hence
/// (ranging over all such `W`) q-rank `> n - 1`.
pub fn certify_diagonal_qrank(gf: &Gf, n: usize, w: &Subspace) -> Result<DiagonalCertificate, WitnessError> {
    if n == 0 || w.ambient_dim() != 3 * n {
        return Err(WitnessError::Malformed(format!("subspace must live in {}-space", 3 * n)));
    }
    if w.codim() != n - 1 {
        return Err(WitnessError::Codimension { expected: n - 1, got: w.codim() });
    }
    let tm = TripleMatrix::from_subspace(n, w);
    let phase = three_phase_basis(gf, &tm)?;
    Ok(DiagonalCertificate { n, subspace: w.clone(), phase })
}

/// Re-derives a diagonal certificate from its subspace and checks it.
pub fn verify_diagonal_certificate(gf: &Gf, cert: &DiagonalCertificate) -> Result<(), String> {
    if cert.subspace.ambient_dim() != 3 * cert.n || cert.subspace.codim() + 1 != cert.n {
        return Err("subspace has the wrong shape".into());
    }
    let tm = TripleMatrix::from_subspace(cert.n, &cert.subspace);
    verify_phase_certificate(gf, &tm, &cert.phase)?;
    if !cert.nonvanishing() {
        return Err("no nonzero pivot coefficient".into());
    }
    Ok(())
}

/// The default test subspace `ker(x_1 - x_2) ∩ ... ∩ ker(x_{n-1} - x_n)`.
pub fn default_subspace(gf: &Gf, n: usize) -> Subspace {
    let mut eqs = Matrix::zeros(n.saturating_sub(1), 3 * n);
    for i in 0..n.saturating_sub(1) {
        eqs[(i, 3 * i)] = Scalar::ONE;
        eqs[(i, 3 * (i + 1))] = gf.neg(Scalar::ONE);
    }
    if n <= 1 {
        return Subspace::whole(3 * n);
    }
    crate::linalg::kernel(gf, &eqs)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseCertificateJson {
    pub field: FieldSpec,
    pub n: usize,
    pub m: usize,
    /// Input rows `[x_i, y_i, z_i]`, each a coefficient vector.
    pub rows: Vec<Vec<Vec<Value>>>,
    pub subspace: Option<Vec<Vec<Value>>>,
    pub trace: Vec<Move>,
    pub r: usize,
    pub s: usize,
    pub t: usize,
    pub basis: Vec<Vec<Value>>,
    pub pivot_coefficient: Option<Value>,
    pub verified: bool,
}

impl PhaseCertificateJson {
    pub fn new(gf: &Gf, input: &TripleMatrix, cert: &PhaseCertificate, subspace: Option<&Subspace>, verified: bool) -> Self {
        let vec_json = |v: &Vec<Scalar>| v.iter().map(|&c| scalar_to_json(gf, c)).collect::<Vec<_>>();
        PhaseCertificateJson {
            field: gf.spec().clone(),
            n: input.n(),
            m: input.m,
            rows: input.rows.iter().map(|row| row.iter().map(vec_json).collect()).collect(),
            subspace: subspace.map(|w| matrix_to_json(gf, w.basis())),
            trace: cert.trace.clone(),
            r: cert.r,
            s: cert.s,
            t: cert.t,
            basis: cert.basis.iter().map(vec_json).collect(),
            pivot_coefficient: cert.pivot_coefficient.map(|c| scalar_to_json(gf, c)),
            verified,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gf5() -> Gf {
        Gf::prime(5).unwrap()
    }

    fn e(m: usize, i: usize) -> Vec<Scalar> {
        (0..m).map(|j| Scalar((i == j) as u32)).collect()
    }

    #[test]
    fn diagonal_cubic_shape() {
        let f = gf5();
        let d1 = diagonal_cubic(&f, 1);
        assert_eq!(d1.terms().len(), 1);
        assert_eq!(d1.coeff([0, 1, 2]), Scalar(1));
        let d2 = diagonal_cubic(&f, 2);
        assert_eq!(d2.terms().keys().copied().collect::<Vec<_>>(), vec![[0, 1, 2], [3, 4, 5]]);
        assert_eq!(diagonal_var_names(2), vec!["x1", "y1", "z1", "x2", "y2", "z2"]);
    }

    #[test]
    fn identity_case() {
        let f = gf5();
        let tm = TripleMatrix::new(3, vec![[e(3, 0), e(3, 1), e(3, 2)]]).unwrap();
        let c = three_phase_basis(&f, &tm).unwrap();
        assert_eq!((c.r, c.s, c.t), (1, 1, 1));
        assert_eq!(c.pivot_coefficient, Some(Scalar(1)));
        assert!(c.trace.is_empty());
        verify_phase_certificate(&f, &tm, &c).unwrap();
    }

    #[test]
    fn one_dependency() {
        let f = gf5();
        let tm = TripleMatrix::new(5, vec![[e(5, 0), e(5, 1), e(5, 2)], [e(5, 3), e(5, 4), e(5, 0)]]).unwrap();
        let c = three_phase_basis(&f, &tm).unwrap();
        assert_eq!(c.r + c.s + c.t, 5);
        assert!(c.t >= 1);
        assert_eq!(c.pivot_coefficient, Some(Scalar(1)));
        verify_phase_certificate(&f, &tm, &c).unwrap();
    }

    #[test]
    fn non_spanning_input() {
        let f = gf5();
        let z = vec![Scalar(0); 2];
        let tm = TripleMatrix::new(2, vec![[e(2, 0), vec![Scalar(2), Scalar(0)], z]]).unwrap();
        assert!(matches!(three_phase_basis(&f, &tm), Err(WitnessError::NotSpanning { rank: 1, m: 2, .. })));
        assert!(TripleMatrix::new(3, vec![[e(2, 0), e(3, 1), e(3, 2)]]).is_err());
    }

    #[test]
    fn tampered_certificates_fail() {
        let f = gf5();
        let tm = TripleMatrix::new(5, vec![[e(5, 0), e(5, 1), e(5, 2)], [e(5, 3), e(5, 4), e(5, 0)]]).unwrap();
        let c = three_phase_basis(&f, &tm).unwrap();
        let mut bad = c.clone();
        bad.pivot_coefficient = Some(Scalar(2));
        assert!(verify_phase_certificate(&f, &tm, &bad).is_err());
        let mut bad = c.clone();
        bad.basis.swap(0, 1);
        assert!(verify_phase_certificate(&f, &tm, &bad).is_err());
        let mut bad = c;
        bad.trace.push(Move::SwapRows { i: 0, j: 7 });
        assert!(verify_phase_certificate(&f, &tm, &bad).is_err());
    }

    #[test]
    fn certify_small_cases() {
        let f = gf5();
        let c1 = certify_diagonal_qrank(&f, 1, &Subspace::whole(3)).unwrap();
        assert!(c1.nonvanishing());
        verify_diagonal_certificate(&f, &c1).unwrap();
        let w = default_subspace(&f, 2);
        assert_eq!(w.codim(), 1);
        let c2 = certify_diagonal_qrank(&f, 2, &w).unwrap();
        assert!(c2.nonvanishing());
        verify_diagonal_certificate(&f, &c2).unwrap();
        assert!(!diagonal_cubic(&f, 2).restrict(&f, &w).unwrap().is_zero());
        assert!(matches!(
            certify_diagonal_qrank(&f, 2, &Subspace::whole(6)),
            Err(WitnessError::Codimension { expected: 1, got: 0 })
        ));
    }

    #[test]
    fn random_codim_two_subspaces() {
        use rand::{Rng, SeedableRng};
        let f = gf5();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let d3 = diagonal_cubic(&f, 3);
        for _ in 0..50 {
            let eqs = Matrix::from_flat(2, 9, (0..18).map(|_| Scalar(rng.gen_range(0..5))).collect());
            let w = crate::linalg::kernel(&f, &eqs);
            if w.codim() != 2 {
                continue;
            }
            let c = certify_diagonal_qrank(&f, 3, &w).unwrap();
            assert!(c.nonvanishing());
            verify_diagonal_certificate(&f, &c).unwrap();
            assert!(!d3.restrict(&f, &w).unwrap().is_zero());
        }
    }

    #[test]
    fn cubic_of_subspace_matrix_is_the_restriction() {
        let f = gf5();
        let w = default_subspace(&f, 3);
        let tm = TripleMatrix::from_subspace(3, &w);
        assert_eq!(tm.cubic(&f), diagonal_cubic(&f, 3).restrict(&f, &w).unwrap());
    }
}
